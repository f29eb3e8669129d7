use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use robust_hjm::affine::{affine_vs_hjm_crosscheck, price_comparison, simulate_short_rate, AffineTermStructure};
use robust_hjm::drift::classical_reduction_check;
use robust_hjm::export::{self, num};
use robust_hjm::hjm::{bond_ladder, evolve_surface, fubini_check, product_rule_check};
use robust_hjm::robust::{martingale_check, martingale_check_unverified, novikov_bound_check};
use robust_hjm::{check_drift_condition, generate_path, vasicek_impossibility, Error, TimeGrid};

use crate::config::Experiment;
use crate::error::CliError;

/// Outcome of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
}

pub struct Context {
    pub exp: Experiment,
    pub out: PathBuf,
    pub quiet: bool,
}

impl Context {
    fn say(&self, line: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", line.as_ref());
        }
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>, CliError> {
        Ok(BufWriter::new(File::create(self.out.join(name))?))
    }

    fn write(&self, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<(), CliError> {
        let mut w = self.create(name)?;
        f(&mut w)?;
        w.flush()?;
        Ok(())
    }
}

fn ensure_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path)?;
    Ok(())
}

pub fn simulate(ctx: &Context) -> Result<Status, CliError> {
    ensure_dir(&ctx.out)?;
    let exp = &ctx.exp;
    let coeffs = exp.coefficients()?;
    let seed = Some(exp.seed);
    let m = exp.grid.n_steps();
    for (i, sc) in exp.family.iter().enumerate() {
        let path = generate_path(sc, exp.grid, exp.seed)?;
        let surface = evolve_surface(&coeffs, &exp.curve, &path)?;
        let ladder = bond_ladder(&surface);
        ctx.write(&format!("path_{i}.csv"), |w| export::write_path(w, &path, seed))?;
        ctx.write(&format!("surface_{i}.csv"), |w| export::write_surface(w, &surface, seed))?;
        ctx.write(&format!("bonds_{i}.csv"), |w| export::write_bond_ladder(w, &ladder, seed))?;
        ctx.say(format!(
            "scenario {i} {}: <B>_tau={:.6} r_tau={:.6} P_0(tau)={:.10} discounted P(tau,tau)={:.10}",
            sc.label(),
            path.qv_path[m],
            ladder.short_rate[m],
            ladder.price.get(0, m),
            ladder.discounted.get(m, m)
        ));
    }
    Ok(Status::Pass)
}

pub fn drift_generate(ctx: &Context) -> Result<Status, CliError> {
    ensure_dir(&ctx.out)?;
    let coeffs = ctx.exp.coefficients()?;
    let grid = coeffs.grid();
    ctx.write("coefficients.csv", |w| {
        writeln!(w, "t,T,alpha,beta,gamma")?;
        for k in 0..grid.len() {
            for m in k..grid.len() {
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    num(grid.t(k)),
                    num(grid.t(m)),
                    num(coeffs.alpha(k, m)),
                    num(coeffs.beta(k, m)),
                    num(coeffs.gamma(k, m))
                )?;
            }
        }
        Ok(())
    })?;
    ctx.say(format!(
        "wrote {} coefficient rows to {}",
        grid.len() * (grid.len() + 1) / 2,
        ctx.out.join("coefficients.csv").display()
    ));
    Ok(Status::Pass)
}

pub fn drift_check(ctx: &Context) -> Result<Status, CliError> {
    ensure_dir(&ctx.out)?;
    let coeffs = ctx.exp.coefficients()?;
    let (prices, report) = check_drift_condition(&coeffs, ctx.exp.check.tolerance)?;
    ctx.write("drift_residuals.csv", |w| export::write_drift_residuals(w, &report))?;
    ctx.write("market_prices.csv", |w| export::write_market_prices(w, &prices, coeffs.grid()))?;
    ctx.say(report.summary());
    for (k, msg) in report.degenerate_nodes.iter().take(5) {
        ctx.say(format!("  degenerate node t={}: {msg}", coeffs.grid().t(*k)));
    }
    let reduction = classical_reduction_check(&coeffs, &prices)?;
    ctx.say(format!("classical reduction: max|residual|={:.3e}", reduction.max_abs));
    Ok(if report.certificate { Status::Pass } else { Status::Fail })
}

pub fn price(ctx: &Context) -> Result<Status, CliError> {
    ensure_dir(&ctx.out)?;
    let exp = &ctx.exp;
    let model =
        exp.affine_model().ok_or_else(|| CliError::Config("model.kind: price needs ho_lee or hull_white".into()))?;
    if exp.model.alpha_shift != 0.0 {
        ctx.say("note: model.alpha_shift is ignored by affine pricing");
    }
    let seed = Some(exp.seed);
    let ts = AffineTermStructure::new(model, exp.curve.clone(), exp.grid)?;
    let m = exp.grid.n_steps();
    for (i, sc) in exp.family.iter().enumerate() {
        let path = generate_path(sc, exp.grid, exp.seed)?;
        let state = simulate_short_rate(&ts, &path)?;
        let rows = price_comparison(&ts, &path)?;
        ctx.write(&format!("short_rate_{i}.csv"), |w| export::write_short_rate(w, exp.grid, &state, seed))?;
        ctx.write(&format!("prices_{i}.csv"), |w| export::write_price_comparison(w, &rows, seed))?;
        let worst = rows.iter().map(|r| r.abs_error()).fold(0.0, f64::max);
        ctx.say(format!(
            "scenario {i} {}: r_tau={:.6} q_tau={:.6} max|affine-hjm|={:.3e}",
            sc.label(),
            state.r[m],
            state.q[m],
            worst
        ));
    }

    let levels = &exp.check.refinement;
    if !levels.is_empty() {
        let finest = *levels.iter().max().expect("nonempty");
        if let Some(bad) = levels.iter().find(|&&n| finest % n != 0) {
            return Err(CliError::Config(format!("check.refinement: {bad} does not divide {finest}")));
        }
        let fine = TimeGrid::new(exp.grid.tau(), finest)?;
        let mut tables = Vec::new();
        for sc in &exp.family {
            let path = generate_path(sc, fine, exp.seed)?;
            let table = affine_vs_hjm_crosscheck(model, &exp.curve, &path, levels)?;
            let ratios: Vec<String> = table.ratios().iter().map(|r| format!("{r:.3}")).collect();
            ctx.say(format!(
                "refinement {}: ratios [{}] c={:.4e}",
                table.scenario,
                ratios.join(", "),
                table.max_constant()
            ));
            tables.push(table);
        }
        ctx.write("crosscheck.csv", |w| export::write_crosscheck(w, &tables, seed))?;
    }
    Ok(Status::Pass)
}

pub fn check(ctx: &Context) -> Result<Status, CliError> {
    ensure_dir(&ctx.out)?;
    let exp = &ctx.exp;
    let seed = Some(exp.seed);
    let coeffs = exp.coefficients()?;
    let mut ok = true;

    let (_, drift) = check_drift_condition(&coeffs, exp.check.tolerance)?;
    ctx.write("drift_residuals.csv", |w| export::write_drift_residuals(w, &drift))?;
    ctx.say(drift.summary());
    ok &= drift.certificate;

    let cp = &exp.check.checkpoints;
    let mat = exp.check.maturity;
    let report = match martingale_check(&coeffs, &exp.curve, mat, &exp.family, exp.paths, exp.seed, cp) {
        Ok(r) => r,
        Err(Error::NotRiskNeutral(why)) => {
            ctx.say(format!(
                "martingale check refused, coefficients not certified risk-neutral ({why}); running uncertified test"
            ));
            ok = false;
            martingale_check_unverified(&coeffs, &exp.curve, mat, &exp.family, exp.paths, exp.seed, cp)?
        }
        Err(e) => return Err(e.into()),
    };
    ctx.write("martingale.csv", |w| export::write_martingale(w, &report, seed))?;
    ctx.say(report.summary());
    for r in report.failures().take(5) {
        ctx.say(format!(
            "  {} t={}: mean={:.8} deviation={:.3e} se={:.3e}",
            r.scenario, r.t, r.mean, r.deviation, r.std_error
        ));
    }
    ok &= report.pass();

    ok &= identities(ctx, mat)?;

    let nov = novikov_bound_check(&coeffs, mat, &exp.family, exp.paths, exp.seed, exp.novikov_params())?;
    ctx.write("novikov.csv", |w| export::write_novikov(w, &nov, seed))?;
    ctx.say(nov.summary());
    ok &= nov.pass();

    ctx.say(if ok { "check: PASS" } else { "check: FAIL" });
    Ok(if ok { Status::Pass } else { Status::Fail })
}

/// Fubini interchange and product rule for the model's `beta`.
fn identities(ctx: &Context, maturity: f64) -> Result<bool, CliError> {
    let exp = &ctx.exp;
    let Some(beta) = exp.beta_field() else {
        ctx.say("identities: skipped (no analytic beta for this model)");
        return Ok(true);
    };
    let grid = exp.grid;
    let mid = grid.t(grid.node_of(maturity).unwrap_or(0) / 2);
    let mut ok = true;
    let mut w = ctx.create("identities.csv")?;
    writeln!(w, "# seed = {}", exp.seed)?;
    writeln!(w, "identity,scenario,t,T,lhs,rhs,discrepancy,pass")?;
    for sc in &exp.family {
        let path = generate_path(sc, grid, exp.seed)?;
        for t in [0.0, mid] {
            let chk = fubini_check(&beta, &path, t, maturity)?;
            for (what, pair) in chk.pairs() {
                let pass = pair.holds_within(1e-12);
                ok &= pass;
                writeln!(
                    w,
                    "fubini_{what},{},{},{},{},{},{},{pass}",
                    sc.label(),
                    num(t),
                    num(maturity),
                    num(pair.lhs),
                    num(pair.rhs),
                    num(pair.discrepancy())
                )?;
            }
        }
    }
    for t in [0.0, mid] {
        let chk = product_rule_check(&beta, grid, t, maturity)?;
        ok &= chk.passes();
        writeln!(
            w,
            "product_rule,,{},{},{},{},{},{}",
            num(t),
            num(maturity),
            num(chk.pair.lhs),
            num(chk.pair.rhs),
            num(chk.pair.discrepancy()),
            chk.passes()
        )?;
    }
    w.flush()?;
    ctx.say(format!("identities: Fubini and product rule {}", if ok { "hold" } else { "FAIL" }));
    Ok(ok)
}

pub fn vasicek(ctx: &Context) -> Result<Status, CliError> {
    ensure_dir(&ctx.out)?;
    let exp = &ctx.exp;
    let rep = vasicek_impossibility(exp.vasicek.theta, exp.vasicek.mu, &exp.curve, &exp.family, exp.grid, exp.seed)?;
    ctx.write("vasicek.csv", |w| export::write_vasicek(w, &rep, Some(exp.seed)))?;
    let last = rep.times.len() - 1;
    ctx.say(format!(
        "vasicek theta={}: spread(tau)={:.6} analytic lower bound {:.6}; max spread {:.3e}; classical fit possible: {}",
        exp.vasicek.theta,
        rep.spread[last],
        rep.analytic_lower_bound[last],
        rep.max_spread,
        rep.classical_fit_possible()
    ));
    Ok(Status::Pass)
}
