use super::table::{Band, Provenance, ResultTable};
use crate::error::Result;
use crate::model::ledger::{constants_ledger_with, psi};
use crate::model::{check_assumptions, ProcessSpec};

/// Relative agreement required when a ledger entry is recomputed.
pub const RECOMPUTE_RTOL: f64 = 1e-12;

fn close(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// The constants ledger of `spec` as a table, one row per quantity with
/// its defining formula in the metric name, plus assumption verdicts and
/// consistency checks that recompute derived entries independently.
pub fn report_constants(spec: &ProcessSpec, seed: u64) -> Result<ResultTable> {
    let report = check_assumptions(spec);
    let geom = spec.geometry()?;
    let l = constants_ledger_with(spec, &geom, &report)?;
    let n = Some(spec.n());
    let mut t = ResultTable::new(
        "constants",
        Provenance::new(&(format!("{spec:?}"), "constants"), seed)?,
    );

    for (name, v) in [
        ("G0 F(c)=0", &report.g0),
        ("G1 rates positive near c", &report.g1),
        ("G2 A Hurwitz", &report.g2),
        ("G3 rates bounded below on the locality ball", &report.g3),
        ("G4 unit vectors reachable", &report.g4),
        ("sigma2(c) positive definite", &report.covariance_pd),
    ] {
        t.check(
            None,
            &format!("assumption {name}"),
            f64::from(u8::from(v.pass)),
            Band::at_least(1.0),
        );
    }
    for (name, v) in [("S2", &report.s2), ("S3", &report.s3), ("S4", &report.s4)] {
        t.info(
            None,
            &format!("elementary condition {name}"),
            f64::from(u8::from(v.pass)),
        );
    }

    let rows: [(&str, f64); 22] = [
        ("d", l.dim as f64),
        ("delta0", l.delta0),
        ("epsilon0", l.epsilon0),
        ("mu_star", l.mu_star),
        ("L0 = sup_ball max_J g^J/g^J(c)", l.l0),
        ("L1 = sup_ball max_J |Dg^J|/g^J(c)", l.l1),
        ("L2 = sup_ball max_J |D2g^J|/g^J(c)", l.l2),
        ("Lambda = Tr sigma2", l.lambda),
        ("Lambda_bar = Lambda/d", l.lambda_bar),
        ("Gamma = sum_J g^J(c)|J|^3", l.gamma),
        ("J_max", l.j_max),
        ("J_sigma_max = max_J |Sigma^-1/2 J|", l.j_sigma_max),
        ("alpha1 = lambda_min(sigma2_Sigma)/2", l.alpha1),
        ("Tr sigma2_Sigma", l.trace_sigma2_sigma),
        ("K_drift = sqrt(2 L0 Tr sigma2_Sigma/(d alpha1))", l.k_drift),
        ("delta_drift = delta0/sqrt(lambda_max Sigma)", l.delta_drift),
        ("d theta1", l.d_theta1),
        ("theta1", l.theta1),
        ("n_drift = (J_sigma_max/(d delta_drift))^(4/3)", l.n_drift),
        (
            "K_exit = L0 exp(theta1 (K_drift + J_sigma_max/d)^2)",
            l.k_exit,
        ),
        ("K_Sigma = 2 Lambda_bar K_exit/(d theta1 alpha1)", l.k_sigma),
        ("kappa0", l.kappa0),
    ];
    for (name, v) in rows {
        t.info(None, name, v);
    }
    t.info(n, "psi(n) = 4 sqrt(log n/(d theta1 n^(3/4)))", l.psi_of_n);
    if let Some(v) = l.delta_drift_d {
        t.info(
            None,
            "delta_drift(d) = alpha1 sqrt(lambda_min Sigma)/(4 d Lambda_bar L2 lambda_max Sigma)",
            v,
        );
    }
    if let (Some(g), Some(big), Some(star), Some(n27)) =
        (&l.g_lower, &l.g_upper, l.g_star, l.n_elementary)
    {
        for (j, (a, b)) in g.iter().zip(big).enumerate() {
            t.info(None, &format!("g^({}) = g^(-e{})(c)", j + 1, j + 1), *a);
            t.info(
                None,
                &format!("G^({}) = sum over A_i{} != 0 of g^(e_i)(c)", j + 1, j + 1),
                *b,
            );
        }
        t.info(None, "g_star", star);
        t.info(None, "n_elementary", n27);
        t.check(None, "elementary L2 = 0", l.l2, Band::at_most(0.0));
    }

    let terms = l.d_theta1_terms();
    let min_terms = terms.iter().copied().fold(f64::INFINITY, f64::min);
    t.check(
        None,
        "d theta1 recomputed as min of three terms (rel. diff)",
        close(l.d_theta1, min_terms),
        Band::at_most(RECOMPUTE_RTOL),
    );
    let nf = spec.n() as f64;
    let psi_direct = 4.0 * (nf.ln() / (l.d_theta1 * nf.powf(0.75))).sqrt();
    t.check(
        n,
        "psi(n) recomputed (rel. diff)",
        close(psi(nf, l.d_theta1), psi_direct),
        Band::at_most(RECOMPUTE_RTOL),
    );
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::bivariate::BivariateParams;
    use crate::model::build_elementary;
    use crate::spectral::{CovarianceMatrix, DriftMatrix};

    #[test]
    fn elementary_rows() {
        let a = DriftMatrix::from_row_slice(2, &[-1.0, 0.5, 0.0, -2.0]).unwrap();
        let s2 = CovarianceMatrix::from_row_slice(2, &[6.0, 2.0, 2.0, 6.0]).unwrap();
        let e = build_elementary(&[3.0, 1.5], &a, &s2).unwrap();
        let t = report_constants(&e.spec.with_n(50), 0).unwrap();
        assert!(t.all_pass(), "{:?}", t.failures());
        assert_eq!(t.value("elementary L2 = 0", None), Some(0.0));
        assert!(t.value("g_star", None).unwrap() > 0.0);
    }

    #[test]
    fn bivariate_process_report() {
        let spec = BivariateParams::default().translated_spec(20, 1.0).unwrap();
        let t = report_constants(&spec, 0).unwrap();
        assert!(t.all_pass(), "{:?}", t.failures());
        assert!(t.value("L2 = sup_ball max_J |D2g^J|/g^J(c)", None).unwrap() == 0.0);
    }
}
