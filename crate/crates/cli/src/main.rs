mod cache;
mod output;

use std::collections::BTreeMap;
use std::ops::RangeInclusive;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use e8jacobi::checks::{self, CheckReport};
use e8jacobi::e8;
use e8jacobi::generators::{builtin, Engine, GeneratorPolynomial};
use e8jacobi::jacobi::JacobiExpansion;
use e8jacobi::orbit_ring::set_max_grade;
use e8jacobi::structure::{
    self, format_laurent, gen_series, holo_levels, laurent_from_dims, n_cap, singular_levels,
    weak_levels, Workspace, STABILITY_TABLE,
};
use e8jacobi::{Error, Result};
use rayon::prelude::*;
use serde_json::{json, Value};

use cache::Cache;
use output::{Format, Output};

#[derive(Parser, Debug)]
#[command(
    name = "e8jacobi",
    version,
    about = "Exact computations with W(E8)-invariant Jacobi forms"
)]
struct Cli {
    /// Expand generators through q^ORDER (default: what the command needs).
    #[arg(long, global = true)]
    order: Option<usize>,

    /// Directory for cached generator expansions.
    #[arg(long, global = true, default_value = "cache")]
    cache_dir: PathBuf,

    /// Disable the expansion cache.
    #[arg(long, global = true)]
    no_cache: bool,

    /// Worker threads for independent indices (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Largest orbit grade the orbit ring may grow to (memory guard).
    #[arg(long, global = true, default_value_t = e8jacobi::orbit_ring::DEFAULT_MAX_GRADE)]
    max_shell_norm: u32,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print one of the numeric tables.
    Tables {
        which: Table,
        /// Largest index (or weight bound for `stability`, as an index range).
        #[arg(long)]
        max: Option<u32>,
        /// Index range `A..B` (inclusive).
        #[arg(long, value_parser = parse_range)]
        range: Option<RangeInclusive<u32>>,
    },
    /// Expand a generator, builtin or polynomial in the generators.
    Expand {
        form: String,
        /// Highest q-power printed (same as --order).
        order: Option<usize>,
        /// Also print the specialization at z = 0.
        #[arg(long)]
        eval_zero: bool,
    },
    /// Run a named verification.
    Verify {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(checks::CHECK_NAMES))]
        check: String,
        /// Largest index for `conjectures`.
        #[arg(long, default_value_t = 5)]
        max: u32,
    },
    /// Bases of weak, holomorphic or singular-weight forms.
    Basis {
        kind: BasisKind,
        /// `WEIGHT INDEX` for weak and holo, `INDEX` for singular.
        #[arg(allow_negative_numbers = true, num_args = 1..=2, required = true)]
        args: Vec<i32>,
        /// Print expansions of basis elements.
        #[arg(long)]
        expansions: bool,
        /// Override the Delta power of the singular-weight ansatz.
        #[arg(long)]
        delta_power: Option<usize>,
    },
    /// Generator weights of the module of weak forms of given index.
    Generators {
        index: u32,
        /// Print the generators' numerator polynomials.
        #[arg(long)]
        certificates: bool,
    },
    /// Generating series of weak forms of given index.
    Series {
        index: u32,
        /// Highest weight printed.
        #[arg(long, default_value_t = 20, allow_negative_numbers = true)]
        to: i32,
        /// Recompute every dimension directly and compare.
        #[arg(long)]
        check: bool,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Table {
    Ranks,
    Delta,
    SingularDims,
    Norms,
    Stability,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum BasisKind {
    Weak,
    Holo,
    Singular,
}

fn parse_range(s: &str) -> std::result::Result<RangeInclusive<u32>, String> {
    let (a, b) = s.split_once("..").ok_or("expected A..B")?;
    let a: u32 = a.trim().parse().map_err(|e| format!("{e}"))?;
    let b: u32 = b
        .trim_start_matches('=')
        .trim()
        .parse()
        .map_err(|e| format!("{e}"))?;
    if a == 0 || a > b {
        return Err("expected 1 <= A <= B".into());
    }
    Ok(a..=b)
}

struct Context {
    order: Option<usize>,
    cache: Option<Cache>,
}

impl Context {
    /// Levels to build: the explicit order if given, else `needed`.
    fn levels(&self, needed: usize) -> usize {
        self.order.map_or(needed.max(1), |o| o + 1)
    }

    fn engine(&self, levels: usize) -> Result<Engine> {
        match &self.cache {
            Some(c) => c.engine(levels),
            None => Engine::build(levels),
        }
    }

    fn workspace(&self, needed: usize) -> Result<Workspace> {
        Ok(Workspace::new(self.engine(self.levels(needed).max(2))?))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(j) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    }
    set_max_grade(cli.max_shell_norm);
    let ctx = Context {
        order: cli.order,
        cache: (!cli.no_cache).then(|| Cache::new(&cli.cache_dir)),
    };
    match run(&ctx, cli.command) {
        Ok((out, ok)) => {
            print!("{}", out.render(cli.format));
            ExitCode::from(if ok { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Mismatch(_) => 1,
        Error::Resource(_) | Error::Cache(_) | Error::Io(_) => 2,
        Error::Usage(_) | Error::Parse { .. } => 3,
    }
}

fn run(ctx: &Context, cmd: Command) -> Result<(Output, bool)> {
    match cmd {
        Command::Tables { which, max, range } => tables(ctx, which, max, range).map(|o| (o, true)),
        Command::Expand {
            form,
            order,
            eval_zero,
        } => {
            let order = order.or(ctx.order).unwrap_or(2);
            expand(ctx, &form, order, eval_zero).map(|o| (o, true))
        }
        Command::Verify { check, max } => verify(ctx, &check, max),
        Command::Basis {
            kind,
            args,
            expansions,
            delta_power,
        } => basis(ctx, kind, &args, expansions, delta_power).map(|o| (o, true)),
        Command::Generators {
            index,
            certificates,
        } => generators(ctx, index, certificates).map(|o| (o, true)),
        Command::Series { index, to, check } => series(ctx, index, to, check),
    }
}

fn index_range(
    max: Option<u32>,
    range: Option<RangeInclusive<u32>>,
    default: u32,
) -> RangeInclusive<u32> {
    range.unwrap_or(1..=max.unwrap_or(default))
}

fn tables(
    ctx: &Context,
    which: Table,
    max: Option<u32>,
    range: Option<RangeInclusive<u32>>,
) -> Result<Output> {
    let (label, default) = match which {
        Table::Ranks => ("r(t)", 18),
        Table::Delta => ("delta_t", 18),
        Table::Norms => ("N(t)", 23),
        Table::SingularDims => ("dim J_{4,t}", 8),
        Table::Stability => ("", 5),
    };
    let ts: Vec<u32> = index_range(max, range, default).collect();
    let values: Vec<Option<u64>> = match which {
        Table::Ranks => {
            let r = structure::rank_r(*ts.last().expect("nonempty") as usize);
            ts.iter().map(|&t| Some(r[t as usize])).collect()
        }
        Table::Delta => ts
            .par_iter()
            .map(|&t| Some(structure::delta_t(t)))
            .collect(),
        Table::Norms => ts
            .iter()
            .map(|&t| Some(structure::orbit_count_norm(t as u64) as u64))
            .collect(),
        Table::SingularDims => {
            let needed = ts
                .iter()
                .map(|&t| singular_levels(t, None))
                .max()
                .unwrap_or(1);
            let ws = ctx.workspace(needed)?;
            ts.par_iter()
                .map(|&t| match ws.singular_solve(t, None) {
                    Ok(s) => Ok(Some(s.dimension as u64)),
                    Err(Error::Resource(_)) => Ok(None),
                    Err(e) => Err(e),
                })
                .collect::<Result<_>>()?
        }
        Table::Stability => return stability(ctx, &ts),
    };
    Ok(output::index_table("t", label, &ts, &values))
}

fn stability(ctx: &Context, ts: &[u32]) -> Result<Output> {
    let needed = ts.iter().map(|&t| weak_levels(t)).max().unwrap_or(1);
    let ws = ctx.workspace(needed)?;
    let modules = ts
        .par_iter()
        .map(|&t| match ws.module_generators(t) {
            Ok(m) => Ok(Some(m.weight_polynomial)),
            Err(Error::Resource(_)) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<_>>>()?;
    let last = *ts.last().expect("nonempty");
    let mut rows = Vec::new();
    for &(k, _, _) in &STABILITY_TABLE {
        let d: Vec<Option<usize>> = modules
            .iter()
            .map(|m| m.as_ref().map(|p| p.get(&k).copied().unwrap_or(0)))
            .collect();
        // Smallest L with d_{K,t} constant on L..=last; provisional if L = last.
        let mut l = None;
        for (i, &t) in ts.iter().enumerate().rev() {
            if d[i].is_some() && d[i] == d[d.len() - 1] {
                l = Some(t);
            } else {
                break;
            }
        }
        let settled = l.is_some_and(|l| l < last);
        rows.push((
            k,
            l.filter(|_| settled),
            l.and(d[d.len() - 1]).filter(|_| settled),
            d,
        ));
    }
    Ok(output::stability_table(ts, &rows))
}

fn resolve_form(
    engine: &Engine,
    form: &str,
) -> Result<(String, JacobiExpansion, Option<GeneratorPolynomial>)> {
    if let Some(e) = engine.sakai().by_name(form) {
        return Ok((form.to_string(), e.clone(), None));
    }
    let poly = match builtin(form) {
        Some(p) => p,
        None => GeneratorPolynomial::parse(form)?,
    };
    Ok((poly.to_string(), engine.expand(&poly)?, Some(poly)))
}

fn expand(ctx: &Context, form: &str, order: usize, eval_zero: bool) -> Result<Output> {
    let levels = order + 1;
    // Parse before building so that syntax errors are reported cheaply.
    if builtin(form).is_none() && !is_generator_name(form) {
        GeneratorPolynomial::parse(form)?;
    }
    let engine = ctx.engine(levels.max(2))?;
    let (source, e) = match &ctx.cache {
        Some(c) if !is_generator_name(form) => {
            let canonical = match builtin(form) {
                Some(p) => p.to_string(),
                None => GeneratorPolynomial::parse(form)?.to_string(),
            };
            match c.load(&canonical, levels)? {
                Some(e) => (canonical, e),
                None => {
                    let (s, e, _) = resolve_form(&engine, form)?;
                    let e = e.truncate(levels);
                    c.store(&s, &e)?;
                    (s, e)
                }
            }
        }
        _ => {
            let (s, e, _) = resolve_form(&engine, form)?;
            (s, e.truncate(levels))
        }
    };
    let reduced = if eval_zero {
        let (_, _, poly) = resolve_form(&engine, form)?;
        Some((e.eval_zero(), poly.map(|p| p.reduce_at_zero())))
    } else {
        None
    };
    Ok(output::expansion(form, &source, &e, reduced))
}

fn is_generator_name(s: &str) -> bool {
    e8jacobi::generators::NAMES.contains(&s) || s == "B5hat"
}

fn verify(ctx: &Context, check: &str, max: u32) -> Result<(Output, bool)> {
    let report: CheckReport = match check {
        "lemma62" => checks::lemma62(),
        "lemma31" | "p165-holo" | "lemma34" => {
            let engine = ctx.engine(ctx.levels(5).max(3))?;
            match check {
                "lemma31" => checks::lemma31(&engine)?,
                "p165-holo" => checks::p165_holomorphic(&engine)?,
                _ => checks::lemma34(&engine)?,
            }
        }
        "eq43" => checks::eq43(&ctx.workspace(weak_levels(2))?)?,
        "eq44" => checks::eq44(&ctx.workspace(weak_levels(3))?)?,
        "conjectures" => {
            let needed = (1..=max)
                .map(|t| singular_levels(t, None).max(weak_levels(t)))
                .max()
                .unwrap_or(1);
            let ws = ctx.workspace(needed)?;
            let report = ws.conjecture_report(1..=max)?;
            checks::conjectures(&report)
        }
        other => return Err(Error::Usage(format!("unknown check {other}"))),
    };
    let ok = report.passed;
    Ok((output::check(&report), ok))
}

fn basis(
    ctx: &Context,
    kind: BasisKind,
    args: &[i32],
    expansions: bool,
    delta_power: Option<usize>,
) -> Result<Output> {
    let positive = |x: i32| -> Result<u32> {
        u32::try_from(x)
            .ok()
            .filter(|&t| t > 0)
            .ok_or_else(|| Error::Usage(format!("index must be positive, got {x}")))
    };
    match (kind, args) {
        (BasisKind::Singular, &[t]) => {
            let t = positive(t)?;
            let d = delta_power.unwrap_or_else(|| n_cap(t).saturating_sub(1));
            // Enough levels to show the first five q-powers of each form.
            let ws = ctx.workspace(singular_levels(t, Some(d)).max(d + 5))?;
            let space = ws.singular_solve(t, Some(d))?;
            let mut phis = Vec::new();
            for m in e8::dominant_by_norm(t as u64) {
                phis.push((m, space.phi(&m)?));
            }
            Ok(output::singular(&space, &phis, expansions))
        }
        (BasisKind::Weak, &[k, t]) => {
            let t = positive(t)?;
            let ws = ctx.workspace(weak_levels(t))?;
            let b = ws.weak_basis(k, t)?;
            let exps = if expansions {
                b.iter().map(|f| f.expansion(ws.engine())).collect::<Result<Vec<_>>>()?
            } else {
                Vec::new()
            };
            Ok(output::weak(k, t, &b, &exps))
        }
        (BasisKind::Holo, &[k, t]) => {
            let t = positive(t)?;
            if k == 4 {
                return Err(Error::Usage("weight 4 is the singular weight; use `basis singular INDEX`".into()));
            }
            let ws = ctx.workspace(holo_levels(t))?;
            let dim = ws.holo_dim(k, t)?;
            let b = if k >= 6 { ws.holo_basis(k, t)? } else { Vec::new() };
            if b.len() != dim {
                return Err(Error::Mismatch(format!(
                    "dim J_{{{k},{t}}}: {dim} from the dimension gap, {} by direct computation",
                    b.len()
                )));
            }
            Ok(output::holo(k, t, &b, expansions))
        }
        _ => Err(Error::Usage(
            "expected `basis weak WEIGHT INDEX`, `basis holo WEIGHT INDEX` or `basis singular INDEX`".into(),
        )),
    }
}

fn generators(ctx: &Context, t: u32, certificates: bool) -> Result<Output> {
    if t == 0 {
        return Err(Error::Usage("index must be positive".into()));
    }
    let ws = ctx.workspace(weak_levels(t))?;
    let m = ws.module_generators(t)?;
    let r = structure::rank_r(t as usize)[t as usize] as usize;
    if m.rank() != r {
        return Err(Error::Mismatch(format!(
            "found {} generators, expected r({t}) = {r}",
            m.rank()
        )));
    }
    Ok(output::generators(&m, certificates))
}

fn series(ctx: &Context, t: u32, to: i32, check: bool) -> Result<(Output, bool)> {
    if t == 0 {
        return Err(Error::Usage("index must be positive".into()));
    }
    let ws = ctx.workspace(weak_levels(t))?;
    let m = ws.module_generators(t)?;
    let s = gen_series(&m.weight_polynomial, to);
    let mut ok = true;
    let mut direct = BTreeMap::new();
    if check {
        for &k in s.keys() {
            let d = ws.weak_dim(k, t)? as u64;
            ok &= d == s[&k];
            direct.insert(k, d);
        }
    }
    let text = format!(
        "P^w_{t} = {}\nJ_{t} = {} + O(x^{})\n",
        format_laurent(&laurent_from_dims(&m.weight_polynomial)),
        format_laurent(&s),
        to + 2
    );
    let mut text = text;
    if check {
        text.push_str(if ok {
            "direct dimensions agree\n"
        } else {
            "direct dimensions DISAGREE\n"
        });
    }
    let json = json!({
        "index": t,
        "generator_weights": m.weight_polynomial.iter().map(|(k, d)| (k.to_string(), json!(d))).collect::<serde_json::Map<_, _>>(),
        "series": s.iter().map(|(k, d)| (k.to_string(), json!(d))).collect::<serde_json::Map<_, _>>(),
        "direct": if check { json!(direct.iter().map(|(k, d)| (k.to_string(), json!(d))).collect::<serde_json::Map<_, _>>()) } else { Value::Null },
    });
    let csv = std::iter::once(vec!["weight".to_string(), "dim".to_string()])
        .chain(s.iter().map(|(k, d)| vec![k.to_string(), d.to_string()]))
        .collect();
    Ok((Output { text, json, csv }, ok))
}
