//! Gnuplot scripts. Each expects to be run from the output directory.

use std::fmt::Write;

const PREAMBLE: &str = "set datafile separator ','\nset key autotitle columnhead\n";

pub fn eigen(csv: &str) -> String {
    let mut s = String::from(PREAMBLE);
    s += "set xlabel 'kappa'\nset ylabel 'eigenvalues of M2(1/2, 1)'\nset xrange [0:8]\nset grid\n";
    let _ = writeln!(
        s,
        "plot for [i=2:5] '{csv}' using 1:i with lines lw 2 title columnheader(i)"
    );
    s
}

/// Log-scale entropy per p against the improved envelope.
pub fn fp(csv: &str, p_list: &[f64]) -> String {
    let mut s = String::from(PREAMBLE);
    s += "set logscale y\nset xlabel 't'\nset ylabel 'E_p(t)'\nset grid\n";
    let mut parts = Vec::new();
    for p in p_list {
        parts.push(format!("'{csv}' using 1:($2=={p} ? $3 : 1/0) with lines title 'E, p={p}'"));
        if *p > 1.0 && *p < 2.0 {
            parts.push(format!(
                "'{csv}' using 1:($2=={p} ? $5 : 1/0) with lines dt 2 title 'envelope, p={p}'"
            ));
        }
    }
    let _ = writeln!(s, "plot {}", parts.join(", \\\n     "));
    s
}

/// Entropy and J_half on a log scale, then ρ(t) against ½.
pub fn kfp(csv: &str, p_list: &[f64]) -> String {
    let mut s = String::from(PREAMBLE);
    s += "set multiplot layout 2,1\nset logscale y\nset xlabel 't'\nset grid\n";
    let mut parts = Vec::new();
    for p in p_list {
        parts.push(format!("'{csv}' using 1:($2=={p} ? $3 : 1/0) with lines title 'E, p={p}'"));
        parts.push(format!("'{csv}' using 1:($2=={p} ? $4 : 1/0) with lines dt 2 title 'J_half, p={p}'"));
    }
    let _ = writeln!(s, "plot {}", parts.join(", \\\n     "));
    s += "unset logscale y\nset ylabel 'rho(t)'\n";
    let rho: Vec<String> = p_list
        .iter()
        .map(|p| format!("'{csv}' using 1:($2=={p} ? $7 : 1/0) with lines title 'p={p}'"))
        .collect();
    let _ = writeln!(s, "plot 0.5 with lines lc 'black' dt 3 notitle, {}", rho.join(", "));
    s += "unset multiplot\n";
    s
}
