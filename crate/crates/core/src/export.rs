//! Plot-ready CSV output.
//!
//! Floats are written with 17 significant digits so values round-trip
//! exactly. Runs driven by random numbers start with a `# seed = N` line.

use std::io::{self, Write};

use crate::affine::{CrosscheckTable, PriceComparison, ShortRateState, VasicekSpreadReport};
use crate::drift::{DriftResidualReport, MarketPrices};
use crate::grid::TimeGrid;
use crate::hjm::{BondLadder, ForwardSurface};
use crate::robust::{MartingaleReport, NovikovReport, RobustEstimate};
use crate::scenario::GPath;

/// `{:.16e}`: 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn seed_line<W: Write>(w: &mut W, seed: Option<u64>) -> io::Result<()> {
    match seed {
        Some(s) => writeln!(w, "# seed = {s}"),
        None => Ok(()),
    }
}

fn row<W: Write>(w: &mut W, cells: &[String]) -> io::Result<()> {
    writeln!(w, "{}", cells.join(","))
}

/// Columns `t,sigma,B,QV`; `sigma` on the last node repeats the last step.
pub fn write_path<W: Write>(w: &mut W, path: &GPath, seed: Option<u64>) -> io::Result<()> {
    seed_line(w, seed)?;
    writeln!(w, "# scenario = {}", path.scenario().label())?;
    writeln!(w, "t,sigma,B,QV")?;
    let grid = path.grid();
    for k in 0..grid.len() {
        let s = path.sigma_real[k.min(grid.n_steps() - 1)];
        row(w, &[num(grid.t(k)), num(s), num(path.b_path[k]), num(path.qv_path[k])])?;
    }
    Ok(())
}

/// Matrix layout: one row per `t`, one column per maturity `T`; cells with
/// `T < t` are empty.
pub fn write_surface<W: Write>(w: &mut W, surface: &ForwardSurface, seed: Option<u64>) -> io::Result<()> {
    seed_line(w, seed)?;
    let grid = surface.grid();
    let mut header = vec!["t".to_string()];
    header.extend(grid.times().iter().map(|t| format!("T={t}")));
    row(w, &header)?;
    for k in 0..grid.len() {
        let mut cells = vec![num(grid.t(k))];
        cells.extend((0..grid.len()).map(|m| if m < k { String::new() } else { num(surface.value(k, m)) }));
        row(w, &cells)?;
    }
    Ok(())
}

/// Long layout `t,T,short_rate,money_market,price,discounted`.
pub fn write_bond_ladder<W: Write>(w: &mut W, ladder: &BondLadder, seed: Option<u64>) -> io::Result<()> {
    seed_line(w, seed)?;
    writeln!(w, "t,T,short_rate,money_market,price,discounted")?;
    let grid = ladder.grid();
    for k in 0..grid.len() {
        for m in k..grid.len() {
            row(
                w,
                &[
                    num(grid.t(k)),
                    num(grid.t(m)),
                    num(ladder.short_rate[k]),
                    num(ladder.money_market[k]),
                    num(ladder.price.get(k, m)),
                    num(ladder.discounted.get(k, m)),
                ],
            )?;
        }
    }
    Ok(())
}

/// `t,T,residual_alpha,residual_gamma_<ij>...` followed by a summary comment.
pub fn write_drift_residuals<W: Write>(w: &mut W, report: &DriftResidualReport) -> io::Result<()> {
    let grid = report.grid();
    let d = (report.residual_gamma.len() as f64).sqrt().round() as usize;
    let mut header = vec!["t".to_string(), "T".to_string(), "residual_alpha".to_string()];
    if d == 1 {
        header.push("residual_gamma".into());
    } else {
        for i in 0..d {
            for j in 0..d {
                header.push(format!("residual_gamma_{i}{j}"));
            }
        }
    }
    row(w, &header)?;
    for k in 0..grid.len() {
        for m in k..grid.len() {
            let mut cells = vec![num(grid.t(k)), num(grid.t(m)), num(report.residual_alpha.get(k, m))];
            cells.extend(report.residual_gamma.iter().map(|g| num(g.get(k, m))));
            row(w, &cells)?;
        }
    }
    writeln!(w, "# {}", report.summary())
}

/// `t,kappa_<l>...,lambda_<ij>_<l>...`.
pub fn write_market_prices<W: Write>(w: &mut W, prices: &MarketPrices, grid: TimeGrid) -> io::Result<()> {
    let d = prices.dim();
    let mut header = vec!["t".to_string()];
    header.extend((0..d).map(|l| format!("kappa_{l}")));
    for i in 0..d {
        for j in 0..d {
            header.extend((0..d).map(|l| format!("lambda_{i}{j}_{l}")));
        }
    }
    row(w, &header)?;
    for k in 0..prices.n_nodes() {
        let mut cells = vec![num(grid.t(k))];
        cells.extend(prices.kappa(k).iter().map(|&x| num(x)));
        for i in 0..d {
            for j in 0..d {
                cells.extend(prices.lambda(i, j, k).iter().map(|&x| num(x)));
            }
        }
        row(w, &cells)?;
    }
    Ok(())
}

/// `t,r,q`.
pub fn write_short_rate<W: Write>(
    w: &mut W,
    grid: TimeGrid,
    state: &ShortRateState,
    seed: Option<u64>,
) -> io::Result<()> {
    seed_line(w, seed)?;
    writeln!(w, "t,r,q")?;
    for k in 0..grid.len() {
        row(w, &[num(grid.t(k)), num(state.r[k]), num(state.q[k])])?;
    }
    Ok(())
}

/// `t,T,affine,hjm,abs_error`.
pub fn write_price_comparison<W: Write>(w: &mut W, rows: &[PriceComparison], seed: Option<u64>) -> io::Result<()> {
    seed_line(w, seed)?;
    writeln!(w, "t,T,affine,hjm,abs_error")?;
    for r in rows {
        row(w, &[num(r.t), num(r.maturity), num(r.affine), num(r.hjm), num(r.abs_error())])?;
    }
    Ok(())
}

/// `model,scenario,n_steps,dt,max_abs_error,ratio,constant`.
pub fn write_crosscheck<W: Write>(w: &mut W, tables: &[CrosscheckTable], seed: Option<u64>) -> io::Result<()> {
    seed_line(w, seed)?;
    writeln!(w, "model,scenario,n_steps,dt,max_abs_error,ratio,constant")?;
    for t in tables {
        for r in &t.rows {
            row(
                w,
                &[
                    t.model.name().replace(',', ";"),
                    t.scenario.clone(),
                    r.n_steps.to_string(),
                    num(r.dt),
                    num(r.max_abs_error),
                    r.ratio.map(num).unwrap_or_default(),
                    num(r.constant),
                ],
            )?;
        }
    }
    Ok(())
}

/// `t,spread,analytic_lower_bound` followed by one residual column per scenario.
pub fn write_vasicek<W: Write>(w: &mut W, report: &VasicekSpreadReport, seed: Option<u64>) -> io::Result<()> {
    seed_line(w, seed)?;
    let mut header: Vec<String> = ["t", "spread", "analytic_lower_bound"].iter().map(|s| s.to_string()).collect();
    header.extend(report.labels.iter().map(|l| format!("residual[{l}]")));
    row(w, &header)?;
    for (k, t) in report.times.iter().enumerate() {
        let mut cells = vec![num(*t), num(report.spread[k]), num(report.analytic_lower_bound[k])];
        cells.extend(report.residuals.iter().map(|r| num(r[k])));
        row(w, &cells)?;
    }
    writeln!(
        w,
        "# max_spread = {} classical_fit_possible = {}",
        num(report.max_spread),
        report.classical_fit_possible()
    )
}

/// `scenario,mean,std_error,paths`, then the family summary as a comment.
pub fn write_robust_estimate<W: Write>(w: &mut W, est: &RobustEstimate, seed: Option<u64>) -> io::Result<()> {
    seed_line(w, seed)?;
    writeln!(w, "scenario,mean,std_error,paths")?;
    for s in &est.scenarios {
        row(w, &[s.label.clone(), num(s.mean), num(s.std_error), s.paths.to_string()])?;
    }
    writeln!(w, "# {}", est.describe())
}

/// `scenario,t,mean,std_error,deviation,se_ratio,allowance,pass`.
pub fn write_martingale<W: Write>(w: &mut W, report: &MartingaleReport, seed: Option<u64>) -> io::Result<()> {
    seed_line(w, seed)?;
    writeln!(w, "scenario,t,mean,std_error,deviation,se_ratio,allowance,pass")?;
    for r in &report.rows {
        row(
            w,
            &[
                r.scenario.clone(),
                num(r.t),
                num(r.mean),
                num(r.std_error),
                num(r.deviation),
                num(r.se_ratio),
                num(r.allowance),
                r.pass.to_string(),
            ],
        )?;
    }
    writeln!(w, "# {}", report.summary())
}

/// `term,scenario,estimate,std_error,bound`.
pub fn write_novikov<W: Write>(w: &mut W, report: &NovikovReport, seed: Option<u64>) -> io::Result<()> {
    seed_line(w, seed)?;
    writeln!(w, "term,scenario,estimate,std_error,bound")?;
    for (name, term) in [("drift", &report.drift_term), ("volatility", &report.volatility_term)] {
        for s in &term.estimate.scenarios {
            row(w, &[name.to_string(), s.label.clone(), num(s.mean), num(s.std_error), num(term.bound)])?;
        }
    }
    writeln!(w, "# {}", report.summary())
}
