use zktorus::diophantine::certify_bad_approx;
use zktorus::gap_sparse::{
    build_cube_cover, build_sparse_cover, classify_b_set, enumerate_b_set, q_form, CapturedBy,
    CoverOptions, FrequencyFamily, PartKind, SparseCover,
};
use zktorus::Truncation;

use crate::commands::Env;
use crate::config::{BSetConfig, DiophantineConfig, FamilyConfig, SparseCoverConfig};
use crate::error::{CliResult, Context};
use crate::output::fmt_f64;

fn part_kind(p: &PartKind) -> &'static str {
    match p {
        PartKind::FiniteList { .. } => "finiteList",
        PartKind::VerticalLine { .. } => "verticalLine",
        PartKind::AsymptoteSequence { .. } => "asymptoteSequence",
        PartKind::CubeTail { .. } => "cubeTail",
        PartKind::Remainder { .. } => "remainder",
    }
}

pub fn sparse_cover(cfg: &SparseCoverConfig, env: &mut Env<'_>) -> CliResult<()> {
    let epsilon = cfg.epsilon.value()?;
    let cover: SparseCover = match cfg.family {
        FamilyConfig::Zk { max } => {
            let target = FrequencyFamily::zk(Truncation::square(max)).context("building window")?;
            let mut opts = CoverOptions::default();
            if let Some(s) = cfg.safety {
                opts.safety = s;
            }
            if let Some(n) = cfg.norm {
                opts.norm = n.into();
            }
            build_sparse_cover(&target, epsilon, opts).context("building sparse cover")?
        }
        FamilyConfig::Cube { max_k } => {
            let target = FrequencyFamily::cube(max_k).context("building cube family")?;
            build_cube_cover(&target, epsilon, cfg.tail_start).context("building cube cover")?
        }
    };
    env.out.write_json("cover.json", &cover)?;
    env.out.write_csv(
        "parts.csv",
        &[
            "index",
            "kind",
            "certificate",
            "certifiedGap",
            "windowMembers",
            "windowGap",
        ],
        cover.parts.iter().enumerate().map(|(i, p)| {
            vec![
                i.to_string(),
                part_kind(&p.description).into(),
                format!("{:?}", p.certificate),
                fmt_f64(p.certified_gap),
                p.window_members.to_string(),
                fmt_f64(p.window_gap),
            ]
        }),
    )?;
    env.out.scalar("gapBudget", cover.gap_budget);
    env.out.scalar("parts", cover.parts.len() as f64);
    env.out.scalar("singletons", cover.singleton_count() as f64);
    env.out.scalar("windowPoints", cover.window_points as f64);
    Ok(())
}

fn captured_label(c: Option<CapturedBy>) -> String {
    match c {
        Some(CapturedBy::Core) => "core".into(),
        Some(CapturedBy::Line) => "line".into(),
        Some(CapturedBy::Asymptote(b)) => format!("asymptote{b}"),
        None => "none".into(),
    }
}

/// Classification plus every window point, for plotting the set.
pub fn bset(cfg: &BSetConfig, env: &mut Env<'_>) -> CliResult<()> {
    let class = classify_b_set(cfg.k, cfg.l, cfg.r).context("classifying B-set")?;
    let window = Truncation::square(cfg.window);
    let points = enumerate_b_set(cfg.k, cfg.l, cfg.r, window).context("enumerating B-set")?;
    let mut rows = Vec::with_capacity(points.len());
    let mut uncaptured = 0;
    for p in &points {
        let by = class.captures(*p);
        uncaptured += usize::from(by.is_none());
        rows.push(vec![
            p.m.to_string(),
            p.n.to_string(),
            q_form(cfg.k, cfg.l, p.m, p.n)
                .context("evaluating Q")?
                .to_string(),
            captured_label(by),
        ]);
    }
    env.out.write_json("classification.json", &class)?;
    env.out
        .write_csv("bset.csv", &["m", "n", "q", "capturedBy"], rows)?;
    if let Some(a) = class.asymptotes() {
        let lo = -(cfg.window as i64);
        let hi = cfg.window as i64;
        env.out.write_csv(
            "asymptotes.csv",
            &["branch", "n", "m"],
            a.iter().flat_map(|s| {
                [lo, hi].map(|n| vec![s.branch.to_string(), n.to_string(), fmt_f64(s.at(n))])
            }),
        )?;
    }
    env.out.scalar("points", points.len() as f64);
    env.out.scalar("uncaptured", uncaptured as f64);
    Ok(())
}

pub fn diophantine(cfg: &DiophantineConfig, env: &mut Env<'_>) -> CliResult<()> {
    let cert = certify_bad_approx(&cfg.theta, cfg.s, cfg.max_n).context("certifying theta")?;
    env.out.write_json("certificate.json", &cert)?;
    env.out.scalar("gamma2", cert.gamma2);
    env.out.scalar("minimizingN", cert.minimizing_n as f64);
    if let Some(a) = cert.analytic_infimum {
        env.out.scalar("analyticInfimum", a);
    }
    Ok(())
}
