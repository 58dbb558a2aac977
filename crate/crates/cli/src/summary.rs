use std::fmt::Write;

use quartic_dual::Certificate;

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn vector(v: &[f64]) -> String {
    const SHOWN: usize = 6;
    let mut parts: Vec<String> = v.iter().take(SHOWN).map(|x| format!("{x:.6}")).collect();
    if v.len() > SHOWN {
        parts.push(format!("... ({} entries)", v.len()));
    }
    format!("[{}]", parts.join(", "))
}

/// Human-readable summary, computed from the certificate document alone.
pub fn render(cert: &Certificate) -> String {
    let mut s = String::new();
    let p = &cert.primal;
    let _ = writeln!(s, "instance       {}", cert.instance_digest);
    let _ = writeln!(
        s,
        "x0             {} after {} Newton iterations{}",
        vector(&p.x0),
        p.iterations,
        if p.converged { "" } else { " (not converged)" }
    );
    let _ = writeln!(
        s,
        "Hessian        {} (lambda_min {:.6e}, lambda_max {:.6e})",
        p.hessian_class.as_str(),
        p.lambda_min,
        p.lambda_max
    );
    let _ = writeln!(s, "J(x0)          {:.15}", p.value);
    let _ = writeln!(s, "|grad J(x0)|   {:.3e}", p.grad_norm);

    if let Some(d) = &cert.duality {
        let kc = &d.k_choice;
        let _ = writeln!(s, "J*             {:.15}", d.j_dual);
        let _ = writeln!(s, "gap            abs {:.3e}, rel {:.3e} (tol {:.1e})", d.gap_abs, d.gap_rel, cert.config.gap_tol);
        let _ = writeln!(
            s,
            "|grad J*|      {:.3e} (bound {:.3e})",
            d.dual_stationarity,
            cert.config.stat_tol * d.stationarity_scale
        );
        let origin = match kc.doublings {
            Some(n) => format!("auto, {n} doublings"),
            None => "fixed".to_owned(),
        };
        let _ = writeln!(s, "K              {} ({origin})", d.dual.k);
        let concavity = kc.margins.concavity.map_or("n/a".to_owned(), |c| format!("{c:.6e}"));
        let _ = writeln!(
            s,
            "K margins      lambda_min(K*I + A) {:.6e}, anchor box {:.6e}, v0 concavity {concavity} (want {:.6e})",
            kc.margins.shift, kc.margins.anchor_box, kc.concavity_required
        );
        let m = &d.membership;
        let _ = writeln!(s, "B*             {:<3} lambda_min {:.6e}", yes_no(m.in_bstar), m.margin_bstar);
        let _ = writeln!(s, "A+             {:<3} lambda_min {:.6e}", yes_no(m.in_aplus), m.margin_aplus);
        let _ = writeln!(s, "A-             {:<3} lambda_max {:.6e}", yes_no(m.in_aminus), m.margin_aminus);
        let _ = writeln!(s, "E*             {}", yes_no(m.in_estar));
        let _ = writeln!(s, "M pd           {:<3} lambda_min {:.6e}", yes_no(m.m_pd), m.margin_m);
    }
    let _ = writeln!(s, "case           {}", cert.case_label.as_str());
    for r in &cert.sampling {
        let worst = r.worst_margin.map_or("n/a".to_owned(), |w| format!("{w:.3e}"));
        let _ = writeln!(
            s,
            "  {:<26} {} checked, {} violations, {} skipped, worst margin {worst}",
            r.check, r.checked, r.violations, r.skipped
        );
    }
    if let Some(l) = &cert.legendre {
        let _ = writeln!(
            s,
            "Legendre       L1 {:.2e}, L1 stationarity {:.2e}, L2 {:.2e}, L3 {:.2e} over {} points",
            l.l1, l.l1_stationarity, l.l2, l.l3, l.checked
        );
    }
    for w in &cert.warnings {
        let _ = writeln!(s, "warning        {w}");
    }
    let _ = writeln!(s, "result         {}", if cert.passed { "PASSED" } else { "FAILED" });
    s
}
