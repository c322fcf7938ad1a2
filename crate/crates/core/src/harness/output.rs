use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::rate::RatePoint;
use super::run::{ReplicaResult, RunRecord};
use crate::contour::{CensusWindow, ContourCensus};
use crate::error::Result;
use crate::theory::CurvePoint;

/// 17 significant digits, scientific notation.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub const RUNS_HEADER: &str = "point,beta,L,K,seed,exchange,target_M,v_L,delta,delta_target,m_star,chi,tau_W,\
lambda_theory,replicas,samples,window_valid,P_A,P_A_err,P_B,P_B_err,P_C,P_C_err,P_intermediate,\
P_intermediate_err,n_intermediate_rate,mean_lambda,lambda_err,mean_lambda_net,lambda_net_err,\
lambda_random_init,lambda_block_init,metastable";

pub fn runs_csv(records: &[RunRecord]) -> String {
    let mut out = String::from(RUNS_HEADER);
    out.push('\n');
    for r in records {
        let f = fmt_f64;
        let exchange = match r.exchange {
            crate::lattice::ExchangeMode::Local => "local",
            crate::lattice::ExchangeMode::Nonlocal => "nonlocal",
        };
        let fields = [
            r.point.to_string(),
            f(r.beta),
            r.l.to_string(),
            f(r.k),
            r.seed.to_string(),
            exchange.to_string(),
            r.target_m.to_string(),
            f(r.v_l),
            f(r.delta),
            fmt_opt(r.delta_target),
            f(r.m_star),
            f(r.chi),
            f(r.tau_w),
            f(r.lambda_theory),
            r.replicas.to_string(),
            r.samples.to_string(),
            r.window_valid.to_string(),
            f(r.p_a),
            f(r.p_a_err),
            f(r.p_b),
            f(r.p_b_err),
            f(r.p_c),
            f(r.p_c_err),
            f(r.p_intermediate),
            f(r.p_intermediate_err),
            f(r.n_intermediate_rate),
            f(r.mean_lambda),
            f(r.lambda_err),
            f(r.mean_lambda_net),
            f(r.lambda_net_err),
            f(r.lambda_random_init),
            f(r.lambda_block_init),
            r.metastable.to_string(),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub const RATE_HEADER: &str =
    "L,v_target,v_L,target_M,delta,log_p,log_p_err,log_p_local,rate,theory,deviation,lambda_theory";

pub fn rate_csv(points: &[RatePoint]) -> String {
    let mut out = String::from(RATE_HEADER);
    out.push('\n');
    for p in points {
        let f = fmt_f64;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            p.l,
            f(p.v_target),
            f(p.v_l),
            p.target_m,
            f(p.delta),
            f(p.log_p),
            f(p.log_p_err),
            f(p.log_p_local),
            f(p.rate),
            f(p.theory),
            f(p.deviation),
            f(p.lambda_theory)
        );
    }
    out
}

/// `delta,lambda_star,phi_value,degenerate` with the critical values in a
/// leading comment.
pub fn curve_csv(d: u32, delta_c: f64, lambda_c: f64, curve: &[CurvePoint]) -> String {
    let mut out = format!("# d={d} delta_c={} lambda_c={}\ndelta,lambda_star,phi_value,degenerate\n", fmt_f64(delta_c), fmt_f64(lambda_c));
    for p in curve {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_f64(p.delta),
            fmt_f64(p.min.lambda_star),
            fmt_f64(p.min.phi_value),
            p.min.degenerate
        );
    }
    out
}

/// `M,v_L,log_p,log_p_err` for a combined multicanonical estimate.
pub fn logp_csv(m_star: f64, sites: usize, rows: &[(i64, f64, f64)]) -> String {
    let mut out = String::from("M,v_L,log_p,log_p_err\n");
    for &(m, lp, err) in rows {
        let v = (m_star * sites as f64 - m as f64) / (2.0 * m_star);
        let _ = writeln!(out, "{m},{},{},{}", fmt_f64(v), fmt_f64(lp), fmt_f64(err));
    }
    out
}

pub const RAW_HEADER: &str = "sweep,M,energy,largest_contour_volume,n_intermediate,n_large";

/// Per-sample measurements of one replica, contour columns at `window`.
pub fn raw_csv(result: &ReplicaResult, window: CensusWindow) -> String {
    let mut out = String::from(RAW_HEADER);
    out.push('\n');
    for s in &result.samples {
        let c = ContourCensus::tally(&s.contours, window);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            s.sweep,
            s.magnetization,
            s.energy,
            c.largest_volume.unwrap_or(0),
            c.n_intermediate,
            c.n_large
        );
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(path, text)?;
    Ok(())
}
