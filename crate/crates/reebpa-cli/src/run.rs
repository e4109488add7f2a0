//! One handler per command. Each returns the certified verdict and the
//! result payload; the envelope and exit code live in main.

use anyhow::{bail, Context, Result};
use serde_json::{json, Value};

use reebpa::census::Census;
use reebpa::chain::{build_chain_summary, ch_growth, hypertight_certificate, ChainError};
use reebpa::contact::{
    fixtures, residual_sup, verify_contact, volume_decomposition, ChartContactForm, GridSpec,
    SmoothingChart, SmoothingFunction,
};
use reebpa::expr::parse;
use reebpa::flow::{find_periodic_orbits, seed_grid, FlowModel, Section};
use reebpa::lefschetz::{tracking_certificate, winding_index, TrackingOptions};
use reebpa::models::{StandardPaMap, SuspensionFlow, TorusAutomorphism};

use crate::config::{CensusCfg, Command, FormCfg, MapCmdCfg, OrbitsCfg, TorsionCfg, TrackCfg};

pub fn dispatch(cmd: &Command) -> Result<(bool, Value)> {
    match cmd {
        Command::Model(c) => model(c),
        Command::Lefschetz(c) => lefschetz(c),
        Command::Smooth(c) => smooth(c),
        Command::Verify(c) => verify(c),
        Command::Orbits(c) => orbits(c),
        Command::Track(c) => track(c),
        Command::Census(c) => census(c),
        Command::Growth(c) => growth(c),
        Command::Chain(c) => chain(c),
        Command::Torsion(c) => torsion(c),
    }
}

enum ResolvedMap {
    Pa(StandardPaMap),
    Torus(TorusAutomorphism),
}

fn resolve_map(cfg: &MapCmdCfg) -> Result<ResolvedMap> {
    match (&cfg.matrix, &cfg.model) {
        (Some(_), Some(_)) => bail!("give either \"model\" or \"matrix\", not both"),
        (Some(m), None) => Ok(ResolvedMap::Torus(
            TorusAutomorphism::new(*m).context("bad matrix")?,
        )),
        (None, Some(name)) if name == "standard_pa" => {
            let n = cfg.n.context("standard_pa needs \"n\" (prong count)")?;
            let lambda = cfg.lambda.context("standard_pa needs \"lambda\" (stretch)")?;
            Ok(ResolvedMap::Pa(
                StandardPaMap::new(n, cfg.k.unwrap_or(0), lambda).context("bad standard_pa")?,
            ))
        }
        (None, Some(other)) => bail!("unknown model {other:?}; expected \"standard_pa\""),
        (None, None) => bail!("need either \"model\": \"standard_pa\" or a \"matrix\""),
    }
}

fn resolve_fixture(name: &str) -> Result<ChartContactForm> {
    Ok(match name {
        "std" => fixtures::std_form(),
        "bp" => fixtures::bp(),
        "bp_pert" => fixtures::bp_pert(),
        "bp_twist" => fixtures::bp_twist(),
        "neg_axis" => fixtures::neg_axis(),
        "slow" => fixtures::slow(),
        other => bail!(
            "unknown fixture {other:?}; catalogue: std, bp, bp_pert, bp_twist, neg_axis, slow"
        ),
    })
}

fn resolve_grid(grid: &Option<crate::config::GridCfg>) -> Result<GridSpec> {
    match grid {
        Some(g) => g.to_spec(),
        None => Ok(GridSpec::standard()),
    }
}

fn model(cfg: &MapCmdCfg) -> Result<(bool, Value)> {
    let result = match resolve_map(cfg)? {
        ResolvedMap::Pa(m) => json!({
            "kind": "standard_pa",
            "prongs": m.prongs(),
            "rotation": m.rotation(),
            "stretch": m.stretch(),
        }),
        ResolvedMap::Torus(m) => json!({
            "kind": "torus_automorphism",
            "matrix": m.matrix(),
            "det": m.det(),
            "trace": m.trace(),
            "expansion": m.expansion(),
        }),
    };
    Ok((true, result))
}

fn lefschetz(cfg: &MapCmdCfg) -> Result<(bool, Value)> {
    let center = cfg.center.unwrap_or([0.0, 0.0]);
    let radius = cfg.radius.unwrap_or(0.5);
    let index = match resolve_map(cfg)? {
        ResolvedMap::Pa(m) => winding_index(&m, center, radius),
        ResolvedMap::Torus(m) => winding_index(&m, center, radius),
    }
    .context("winding index")?;
    Ok((
        true,
        json!({ "index": index, "center": center, "radius": radius }),
    ))
}

fn smooth(cfg: &FormCfg) -> Result<(bool, Value)> {
    let form = resolve_fixture(&cfg.fixture)?;
    let grid = resolve_grid(&cfg.grid)?;
    let chart = SmoothingChart::standard();
    let chi = SmoothingFunction::standard().scaled(cfg.epsilon);
    let (ra, rd) = residual_sup(&form, &chart, &chi, &grid).context("residuals")?;
    let tol_alpha = cfg.tol_alpha.unwrap_or(1e-9);
    let tol_dalpha = cfg.tol_dalpha.unwrap_or(1e-7);
    let pass = ra <= tol_alpha && rd <= tol_dalpha;
    Ok((
        pass,
        json!({
            "fixture": cfg.fixture,
            "epsilon": cfg.epsilon,
            "residual_alpha_sup": ra,
            "residual_dalpha_sup": rd,
            "tol_alpha": tol_alpha,
            "tol_dalpha": tol_dalpha,
            "cells_checked": grid.points().len(),
        }),
    ))
}

fn verify(cfg: &FormCfg) -> Result<(bool, Value)> {
    let form = resolve_fixture(&cfg.fixture)?;
    let grid = resolve_grid(&cfg.grid)?;
    let chart = SmoothingChart::standard();
    let chi = SmoothingFunction::standard().scaled(cfg.epsilon);
    let report = verify_contact(&form, &chart, &chi, &grid).context("contact check")?;
    let mut violations = Vec::new();
    if !report.pass {
        for (t, r, th) in grid.points() {
            let d = volume_decomposition(&form, &chart, &chi, t, r, th)
                .context("volume decomposition")?
                .density();
            if d <= 0.0 {
                violations.push(json!({ "point": [t, r, th], "density": d }));
                if violations.len() == 32 {
                    break;
                }
            }
        }
    }
    let pass = report.pass;
    Ok((
        pass,
        json!({
            "fixture": cfg.fixture,
            "epsilon": cfg.epsilon,
            "report": report,
            "violations": violations,
        }),
    ))
}

fn orbits(cfg: &OrbitsCfg) -> Result<(bool, Value)> {
    let model = match cfg.flow.as_str() {
        "reeb" => {
            let name = cfg.fixture.as_deref().context("flow \"reeb\" needs a \"fixture\"")?;
            FlowModel::Reeb {
                form: resolve_fixture(name)?,
                chart: SmoothingChart::standard(),
                chi: SmoothingFunction::standard().scaled(cfg.epsilon),
            }
        }
        "suspension" => {
            let m = cfg.matrix.context("flow \"suspension\" needs a \"matrix\"")?;
            FlowModel::TorusSuspension(SuspensionFlow::new(
                TorusAutomorphism::new(m).context("bad matrix")?,
            ))
        }
        "pa" => {
            let n = cfg.n.context("flow \"pa\" needs \"n\"")?;
            let lambda = cfg.lambda.context("flow \"pa\" needs \"lambda\"")?;
            FlowModel::PaSuspension(
                StandardPaMap::new(n, cfg.k.unwrap_or(0), lambda).context("bad standard_pa")?,
            )
        }
        "torsion" => {
            let k = cfg.torsion_k.context("flow \"torsion\" needs \"torsion_k\"")?;
            FlowModel::torsion(k).context("bad torsion layer count")?
        }
        "user" => {
            let comp = |label: &str, src: &Option<String>| -> Result<_> {
                let src = src
                    .as_deref()
                    .with_context(|| format!("flow \"user\" needs \"{label}\""))?;
                parse(src).with_context(|| format!("parsing \"{label}\""))
            };
            FlowModel::UserField {
                ft: comp("ft", &cfg.ft)?,
                fr: comp("fr", &cfg.fr)?,
                fth: comp("fth", &cfg.fth)?,
            }
        }
        other => bail!("unknown flow {other:?}; one of reeb, suspension, pa, torsion, user"),
    };
    let section = Section::new(&model, cfg.t0, cfg.radius).context("section")?;
    let seeds = seed_grid(&model, &section, cfg.seeds_per_axis);
    let search = find_periodic_orbits(&model, &section, cfg.returns, &seeds, cfg.tol)
        .context("orbit search")?;
    Ok((
        true,
        json!({
            "flow": cfg.flow,
            "returns": cfg.returns,
            "orbits": search.orbits,
            "seeds_attempted": search.seeds_attempted,
            "seeds_failed": search.seeds_failed,
        }),
    ))
}

fn track(cfg: &TrackCfg) -> Result<(bool, Value)> {
    let form = resolve_fixture(&cfg.fixture)?;
    let reference = FlowModel::Reeb {
        form: form.clone(),
        chart: SmoothingChart::Identity,
        chi: SmoothingFunction::zero(),
    };
    let smoothed = FlowModel::Reeb {
        form,
        chart: SmoothingChart::standard(),
        chi: SmoothingFunction::standard().scaled(cfg.epsilon),
    };
    let section = Section::new(&smoothed, 0.0, cfg.section_radius).context("section")?;
    let opts = TrackingOptions {
        core_radius: cfg.core_radius,
        tube_radius: cfg.tube_radius,
        l_bound: cfg.l_bound,
        field_tol: cfg.field_tol,
        tol: cfg.tol,
    };
    let cert = tracking_certificate(&reference, &smoothed, &section, &cfg.anchors, &opts)
        .context("tracking")?;
    let pass = cert.pass;
    Ok((pass, serde_json::to_value(cert)?))
}

fn census(cfg: &CensusCfg) -> Result<(bool, Value)> {
    if cfg.cutoffs.is_some() || cfg.csv.is_some() {
        bail!("\"cutoffs\" and \"csv\" belong to the growth and chain commands");
    }
    let base = TorusAutomorphism::new(cfg.matrix).context("bad matrix")?;
    let census = Census::enumerate(base, cfg.kmax).context("enumeration")?;
    let simple: Vec<_> = census.records().iter().filter(|r| r.iterate == 1).collect();
    Ok((
        true,
        json!({
            "matrix": cfg.matrix,
            "kmax": cfg.kmax,
            "levels": census.level_summary(),
            "orbit_records": simple,
            "total_records": census.records().len(),
        }),
    ))
}

fn growth(cfg: &CensusCfg) -> Result<(bool, Value)> {
    if cfg.cutoffs.is_some() {
        bail!("\"cutoffs\" belongs to the chain command");
    }
    let base = TorusAutomorphism::new(cfg.matrix).context("bad matrix")?;
    let census = Census::enumerate(base, cfg.kmax).context("enumeration")?;
    let table = census.growth_table();
    let fit = census.growth_rate().context("growth fit")?;
    if let Some(path) = &cfg.csv {
        let mut csv = String::from("l,gf\n");
        for (i, gf) in table.iter().enumerate() {
            csv.push_str(&format!("{},{gf}\n", i + 1));
        }
        std::fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok((
        true,
        json!({
            "matrix": cfg.matrix,
            "kmax": cfg.kmax,
            "table": table,
            "fit": fit,
            "csv": cfg.csv,
        }),
    ))
}

fn chain(cfg: &CensusCfg) -> Result<(bool, Value)> {
    let base = TorusAutomorphism::new(cfg.matrix).context("bad matrix")?;
    let census = Census::enumerate(base, cfg.kmax).context("enumeration")?;
    let horizon = census.action_horizon();
    let hypertight = hypertight_certificate(&census, horizon).context("hypertight")?;

    let mut cases = std::collections::BTreeMap::from([
        ("1a".to_owned(), 0u64),
        ("1b".to_owned(), 0),
        ("1c".to_owned(), 0),
        ("empty".to_owned(), 0),
        ("mixed".to_owned(), 0),
    ]);
    for key in census.by_class().keys() {
        match build_chain_summary(&census, *key, horizon) {
            Ok(s) => {
                let tag = serde_json::to_value(s.case)?;
                *cases.get_mut(tag.as_str().expect("case tags are strings")).unwrap() += 1;
            }
            Err(ChainError::MixedClass { .. }) => *cases.get_mut("mixed").unwrap() += 1,
            Err(e) => return Err(e).context("class summary"),
        }
    }

    let cutoffs = match &cfg.cutoffs {
        Some(c) => c.clone(),
        None => (1..=cfg.kmax).map(f64::from).collect(),
    };
    let ch = ch_growth(&census, &cutoffs).context("certified growth")?;
    if let Some(path) = &cfg.csv {
        let mut csv = String::from("l,classes,certified\n");
        for row in &ch.rows {
            csv.push_str(&format!("{},{},{}\n", row.l, row.classes, row.certified));
        }
        std::fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?;
    }
    let pass = hypertight.pass;
    Ok((
        pass,
        json!({
            "matrix": cfg.matrix,
            "kmax": cfg.kmax,
            "hypertight": hypertight,
            "cases": cases,
            "ch": ch,
            "csv": cfg.csv,
        }),
    ))
}

fn torsion(cfg: &TorsionCfg) -> Result<(bool, Value)> {
    let model = reebpa::chain::torsion_tori(cfg.k, cfg.class).context("torsion model")?;
    let bound = reebpa::chain::torsion_rank_bound(cfg.k, cfg.class).context("rank bound")?;
    Ok((
        true,
        json!({
            "k": cfg.k,
            "class": cfg.class,
            "tori": model.tori,
            "generators": bound.generators,
            "bound": bound.bound,
            "action": bound.action,
            "theta": bound.theta,
            "theta_nonpositive": bound.theta_nonpositive,
        }),
    ))
}
