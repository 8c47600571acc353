use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;

use weierdim::cantor::{branching_check, build_levels, lemma_checks, phase_check};
use weierdim::grid::{box_count_table, build_ladder, fit_dimension, CountMethod, Ladder, SlopeFit};
use weierdim::seqcore::SequenceSpec;
use weierdim::theory::{dimension_report, synthesize};
use weierdim::weierfn::{
    make_base, oscillation, truncate, BaseFunction, Density, TruncatedSeries, Truncation,
};

use crate::config::{ExperimentConfig, RunManifest, SpecSource};
use crate::error::{CliError, CliResult};
use crate::export;
use crate::{
    BoxdimArgs, CantorArgs, Command, EvalArgs, Format, MethodArg, OscArgs, SeriesArgs, SourceArgs,
    SynthArgs, TheoryArgs, VerifyArgs,
};

pub fn run(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::Theory(a) => theory(a),
        Command::Synth(a) => synth(a),
        Command::Eval(a) => eval(a),
        Command::Osc(a) => osc(a),
        Command::Boxdim(a) => boxdim(a),
        Command::Cantor(a) => cantor(a),
        Command::Verify(a) => verify(a),
    }
}

fn pair(text: &str, what: &str) -> CliResult<(String, String)> {
    text.split_once(':')
        .map(|(a, b)| (a.trim().to_string(), b.trim().to_string()))
        .ok_or_else(|| CliError::Config(format!("{what} must look like a:b, got {text:?}")))
}

fn real_pair(text: &str, what: &str) -> CliResult<(f64, f64)> {
    let (a, b) = pair(text, what)?;
    let parse = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| CliError::Config(format!("{what}: {s:?} is not a number")))
    };
    Ok((parse(&a)?, parse(&b)?))
}

fn source_of(a: &SourceArgs) -> CliResult<SpecSource> {
    if let Some(path) = &a.spec {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        return Ok(SpecSource::Spec(SequenceSpec::from_json(&text)?));
    }
    if let Some(hb) = &a.synth {
        let (h, b) = real_pair(hb, "--synth")?;
        return Ok(SpecSource::Synthesis { h, b });
    }
    let name = a.preset.clone().expect("clap enforces one source");
    crate::config::preset(&name)?;
    Ok(SpecSource::Preset { name })
}

fn spec_of(a: &SourceArgs, skip: usize) -> CliResult<(SpecSource, SequenceSpec<f64>)> {
    let source = source_of(a)?;
    let spec = source.resolve()?;
    Ok((source, if skip > 0 { spec.tail(skip) } else { spec }))
}

struct Prepared {
    config: ExperimentConfig,
    spec: SequenceSpec<f64>,
    g: BaseFunction<f64>,
    series: TruncatedSeries<f64>,
}

fn prepare(cmd: &str, a: &SeriesArgs) -> CliResult<Prepared> {
    let (source, spec) = spec_of(&a.source, a.skip)?;
    let g = make_base(a.g.into())?;
    let target = match (a.depth, a.accuracy) {
        (Some(n), _) => Truncation::Depth(n),
        (None, Some(eps)) => Truncation::Accuracy(eps),
        (None, None) => {
            return Err(CliError::Config(
                "one of --depth or --accuracy is required".into(),
            ))
        }
    };
    let series = truncate(&spec, &g, target, a.eta)?;
    let config = ExperimentConfig {
        command: cmd.to_string(),
        source,
        base_function: a.g,
        depth: Some(series.depth),
        accuracy: a.accuracy,
        ladder: None,
        outputs: BTreeMap::new(),
        seed: crate::config::DEFAULT_SEED,
        eta: a.eta,
    };
    Ok(Prepared {
        config,
        spec,
        g,
        series,
    })
}

fn theory(a: TheoryArgs) -> CliResult<()> {
    let (_, spec) = spec_of(&a.source, a.skip)?;
    let (n0, n1) = pair(&a.window, "--window")?;
    let parse = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| CliError::Config(format!("--window: {s:?} is not an index")))
    };
    let rep = dimension_report(&spec, (parse(&n0)?, parse(&n1)?))?;
    match a.format {
        Format::Json => export::write_json(&rep, a.output.as_deref()),
        Format::Csv => match &a.output {
            Some(p) => export::dimension_report_csv(&rep, export::create(p)?),
            None => export::dimension_report_csv(&rep, std::io::stdout().lock()),
        },
    }
}

fn synth(a: SynthArgs) -> CliResult<()> {
    let spec = synthesize(a.h, a.b)?;
    let text = spec.to_json() + "\n";
    match &a.output {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

#[derive(Serialize)]
struct EvalOut {
    x: f64,
    value: f64,
    error_bound: f64,
    depth: usize,
}

fn eval(a: EvalArgs) -> CliResult<()> {
    let p = prepare("eval", &a.series)?;
    let (value, error_bound) = p.series.eval(a.x);
    export::write_json(
        &EvalOut {
            x: a.x,
            value,
            error_bound,
            depth: p.series.depth,
        },
        None,
    )
}

fn osc(a: OscArgs) -> CliResult<()> {
    let p = prepare("osc", &a.series)?;
    let s = oscillation(&p.series, a.t, a.r, Density::default())?;
    if let Some(path) = &a.csv {
        export::oscillation_csv(&[s], export::create(path)?)?;
    }
    export::write_json(&s, None)
}

fn ladder_of(text: &str) -> CliResult<Ladder<f64>> {
    let (name, arg) = match text.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (text, None),
    };
    match (name, arg) {
        ("auto", None) => Ok(Ladder::Auto),
        ("generation", None) => Ok(Ladder::Generation),
        ("geometric", f) => {
            let factor = match f {
                Some(s) => s
                    .parse()
                    .map_err(|_| CliError::Config(format!("--ladder: bad factor {s:?}")))?,
                None => 2.0,
            };
            Ok(Ladder::Geometric { factor })
        }
        _ => Err(CliError::Config(format!(
            "--ladder must be auto, generation or geometric[:factor], got {text:?}"
        ))),
    }
}

#[derive(Serialize)]
struct BoxdimOut {
    domain: (f64, f64),
    padded: bool,
    fit: SlopeFit<f64>,
    /// Fit over the monotone interval of g, or why it could not be made.
    monotone_interval: (f64, f64),
    monotone_fit: Result<SlopeFit<f64>, String>,
}

fn boxdim(a: BoxdimArgs) -> CliResult<()> {
    let p = prepare("boxdim", &a.series)?;
    let domain = real_pair(&a.domain, "--domain")?;
    let ladder = ladder_of(&a.ladder)?;
    let method = match a.method {
        MethodArg::Column => CountMethod::ColumnOscillation,
        MethodArg::Cell => CountMethod::CellEnumeration,
    };
    let scales = build_ladder(&p.series, domain, &ladder)?;
    let table = box_count_table(&p.series, domain, &scales, method)?;
    if let Some(path) = &a.csv {
        export::box_table_csv(&table, export::create(path)?)?;
    }
    let fit = fit_dimension(&table)?;
    let iv = p.g.monotone_interval;
    let monotone_fit = build_ladder(&p.series, iv, &ladder)
        .and_then(|s| box_count_table(&p.series, iv, &s, method))
        .and_then(|t| fit_dimension(&t))
        .map_err(|e| e.to_string());
    export::write_json(
        &BoxdimOut {
            domain,
            padded: table.padded,
            fit,
            monotone_interval: iv,
            monotone_fit,
        },
        a.output.as_deref(),
    )
}

#[derive(Serialize)]
struct CantorOut {
    cards: Vec<usize>,
    q_hat: f64,
    weight_sums_exact: bool,
    branching_floor_ok: bool,
    card_bound_ok: bool,
    measure_bound_ok: bool,
    total_lengths: Vec<f64>,
}

fn cantor(a: CantorArgs) -> CliResult<()> {
    let (_, spec) = spec_of(&a.source, a.skip)?;
    let g = make_base(a.g.into())?;
    let levels = build_levels(&spec, &g, a.depth)?;
    if let Some(path) = &a.emit {
        export::write_json(&levels, Some(path))?;
    }
    let rep = branching_check(&levels, &g);
    export::write_json(
        &CantorOut {
            cards: rep.cards.clone(),
            q_hat: rep.q_hat,
            weight_sums_exact: rep.mass_ok,
            branching_floor_ok: rep.floor_violations.is_empty(),
            card_bound_ok: rep.card_ok,
            measure_bound_ok: rep.measure_ok,
            total_lengths: rep.total_lengths.clone(),
        },
        None,
    )?;
    if rep.passed() {
        Ok(())
    } else {
        Err(CliError::CheckFailed(
            "cantor: branching checks failed".into(),
        ))
    }
}

fn verify(a: VerifyArgs) -> CliResult<()> {
    let start = Instant::now();
    let mut p = prepare("verify", &a.series)?;
    p.config.seed = a.seed;
    if let Some(path) = &a.report {
        p.config
            .outputs
            .insert("report".into(), path.display().to_string());
    }
    let depth = a.levels.unwrap_or(p.series.depth);
    let levels = build_levels(&p.spec, &p.g, depth)?;
    let built = start.elapsed().as_secs_f64();
    let rep = lemma_checks(&p.series, &levels, a.trials, a.seed)?;
    let phase_bad = phase_check(&levels, &p.g, 1000, a.seed);
    let mut m = RunManifest::new(p.config);
    m.timings.insert("levels".into(), built);
    m.timings
        .insert("checks".into(), start.elapsed().as_secs_f64() - built);
    m.check(
        "upper_oscillation_bound",
        rep.upper_ok(),
        format!("c0_hat {:.6} <= cap {:.6}", rep.c0_hat, rep.c0_cap),
    );
    m.check(
        "lower_oscillation_bound",
        rep.lower_ok(),
        match &rep.lower_violation {
            Some(v) => format!(
                "assumption violated at n = {}, x = {}, y = {}",
                v.n, v.x, v.y
            ),
            None => format!(
                "c1_hat {:.6} vs delta {:.6}; c2_hat {:.6} vs predicted {:.6}",
                rep.c1_hat, rep.c1_predicted, rep.c2_hat, rep.c2_predicted
            ),
        },
    );
    let b = &rep.branching;
    m.check(
        "branching_floor",
        b.floor_violations.is_empty() && b.card_ok,
        format!(
            "cards {:?}, q_hat {:.6}, floor violations {}",
            b.cards,
            b.q_hat,
            b.floor_violations.len()
        ),
    );
    m.check(
        "measure_bound",
        b.measure_ok,
        format!("mu(I_n,j) < 1/(q^n b_n) with q = {:.6}", b.q_hat),
    );
    m.check(
        "weight_sums",
        b.mass_ok,
        "exact rational sums per level".into(),
    );
    m.check(
        "phase_property",
        phase_bad.is_empty(),
        format!("{} points outside I", phase_bad.len()),
    );
    for (k, v) in [
        ("c0_hat", rep.c0_hat),
        ("c1_hat", rep.c1_hat),
        ("c2_hat", rep.c2_hat),
        ("q_hat", b.q_hat),
    ] {
        m.fitted.insert(k.into(), v);
    }
    export::write_json(&m, a.report.as_deref())?;
    if a.report.is_some() {
        for c in &m.checks {
            println!(
                "{} {}: {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            );
        }
    }
    if m.all_passed() {
        Ok(())
    } else {
        Err(CliError::CheckFailed("verify: see manifest".into()))
    }
}
