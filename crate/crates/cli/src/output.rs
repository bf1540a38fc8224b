//! Report and CSV formatting. CSV output uses `\n` line endings and dot
//! decimal separators regardless of locale.

use gqdecay::{DecayReport, PriorityReport, Regime, SampledPath, Tightness};

/// Format with 9 significant digits in plain decimal notation.
pub fn sig9(x: f64) -> String {
    if x == 0.0 {
        return "0.000000000".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    let decimals = (8 - mag).clamp(0, 17) as usize;
    format!("{x:.decimals$}")
}

pub fn regime_str(r: Regime) -> &'static str {
    match r {
        Regime::A => "A",
        Regime::B => "B",
    }
}

pub fn tightness_str(t: &Tightness) -> String {
    match t {
        Tightness::Tight => "tight".into(),
        Tightness::NotTight { worst_r, margin } => {
            format!("not_tight (margin {margin:.3e} at r = {worst_r:.4})")
        }
        Tightness::Unknown => "unknown".into(),
    }
}

pub fn path_csv(path: &SampledPath) -> String {
    let mut out = String::from("r,f,g\n");
    for i in 0..path.r.len() {
        out.push_str(&sig9(path.r[i]));
        out.push(',');
        out.push_str(&sig9(path.f[i]));
        out.push(',');
        out.push_str(&sig9(path.g[i]));
        out.push('\n');
    }
    out
}

pub fn print_tandem_report(rep: &DecayReport, mu: f64) {
    println!("decay rate (lower bound): {}", sig9(rep.decay_rate));
    println!("regime: {}", regime_str(rep.regime));
    println!(
        "c1 critical: {} (centered {}){}",
        sig9(rep.c1_critical),
        sig9(rep.c1_critical_centered),
        if rep.c1_critical_divergent { " [divergent]" } else { "" }
    );
    println!("t* = {}{}", sig9(rep.t_star), if rep.t_at_boundary { " [at t0]" } else { "" });
    match rep.s_star {
        Some(s) => println!("s* = {}{}", sig9(s), if rep.s_at_boundary { " [at window edge]" } else { "" }),
        None => println!("s* = n/a (single binding constraint)"),
    }
    println!("fifo floor at c2: {} (t = {})", sig9(rep.fifo_floor), sig9(rep.fifo_t));
    println!(
        "cost decomposition: window {} + shortfall {}",
        sig9(rep.decomposition.0),
        sig9(rep.decomposition.1)
    );
    println!("tightness: {}", tightness_str(&rep.tightness));
    if let Some(rb) = rep.refined_bound {
        println!("refined bound ({} constraints): {}", rb.constraints, sig9(rb.value));
    }
    if !rep.t_ties.is_empty() {
        println!("alternate horizons tying within tolerance: {:?}", rep.t_ties);
    }
    println!("mean rate: {mu} (reported rates are in original units)");
}

pub fn print_priority_report(rep: &PriorityReport) {
    println!("decay rate (lower bound): {}", sig9(rep.decay_bound));
    println!("regime: {}", regime_str(rep.regime));
    println!("t* = {}", sig9(rep.t_star));
    match rep.s_star {
        Some(s) => println!("s* = {}", sig9(s)),
        None => println!("s* = n/a (empty-buffer regime)"),
    }
    println!("comparison bound (s = t): {}", sig9(rep.equal_time_bound));
    println!("comparison bound (double infimum): {}", sig9(rep.double_inf_bound));
    if let Some(cf) = rep.closed_form {
        println!("closed form (Brownian classes): {}", sig9(cf));
    }
    println!("total-queue fifo rate: {} (t = {})", sig9(rep.fifo_value), sig9(rep.fifo_t));
}

#[cfg(test)]
mod tests {
    use super::sig9;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(sig9(1.0), "1.00000000");
        assert_eq!(sig9(0.123456789123), "0.123456789");
        assert_eq!(sig9(-1234.56789123), "-1234.56789");
        assert_eq!(sig9(0.0), "0.000000000");
        assert_eq!(sig9(1.23456789e-4), "0.000123456789");
    }
}
