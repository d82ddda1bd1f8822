//! Command-line front end: parses configs, dispatches single computations
//! and verification suites, and emits JSON or CSV.
//!
//! Exit codes: 0 all checks passed, 1 a check failed, 2 usage or
//! configuration error, 3 a constant that must be finite came out infinite.

use crate::exponents::{self, ExponentConfig};
use crate::grid::{DyadicGrid, GridFunction, Policy};
use crate::rational::Rational;
use crate::sparse::{self, SparseFamilyRecord};
use crate::verify::{self, SuiteConfig, VerificationReport};
use crate::weights::{ml_constant, VectorWeight, WeightSpec};
use crate::{Error, Result};
use std::collections::BTreeMap;
use std::path::Path;

pub fn run_cli(args: &[String]) -> i32 {
    match dispatch(args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InfiniteConstant(_) => 3,
                _ => 2,
            }
        }
    }
}

const USAGE: &str = "usage: muckenhoupt <command> [flags]

commands:
  constants --weights <spec,..> --p <list> --r <list>   vector characteristic
  exponents derive --p <list> --r <list>                derived exponents
  exponents path --p <list> --q <list> --r <list>       certified path
  exponents interval --q <a,b> --r <a,b,c>              power-weight interval
  exponents interval --p <a,b> [--s <a,b>]              bilinear power interval
  exponents admissible --r <a,b,c>                      admissibility of a triple
  verify <suite>                                        run one suite
  sparse build --zeta <rat> --seed <n>                  draw a sparse family
  sparse eval --family <path> --r <list> --inputs <csv,..> --h <csv>
  report                                                run every suite

common flags: --dim <1|2> --depth <n> --policy <dyadic|shifted|mesh>
              --seed <n> --samples <n> --out <json|csv> --output <path>

weight specs: power:a=<real> | grid:<path.csv> | gen:cr:eta=<r>:seed=<n>
              | gen:logu:osc=<r>:seed=<n> | gen:expbmo:lambda=<r>:seed=<n>

exponents accept exact rationals: 3/2, 1.5, 2";

struct Parsed {
    positional: Vec<String>,
    flags: BTreeMap<String, String>,
}

fn parse_args(args: &[String]) -> Result<Parsed> {
    let mut positional = Vec::new();
    let mut flags = BTreeMap::new();
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if let Some(name) = a.strip_prefix("--") {
            let value = it
                .next()
                .ok_or_else(|| Error::Parse(format!("flag --{name} needs a value")))?;
            flags.insert(name.to_string(), value.clone());
        } else {
            positional.push(a.clone());
        }
    }
    Ok(Parsed { positional, flags })
}

const COMMON_FLAGS: &[&str] = &["dim", "depth", "policy", "seed", "samples", "out", "output"];

impl Parsed {
    /// Rejects any flag outside the allowed set; no partial runs on typos.
    fn expect_flags(&self, allowed: &[&str]) -> Result<()> {
        for key in self.flags.keys() {
            if !allowed.contains(&key.as_str()) && !COMMON_FLAGS.contains(&key.as_str()) {
                return Err(Error::Parse(format!("unknown flag --{key}")));
            }
        }
        Ok(())
    }

    fn rationals(&self, key: &str) -> Result<Vec<Rational>> {
        let raw = self
            .flags
            .get(key)
            .ok_or_else(|| Error::Parse(format!("missing required flag --{key}")))?;
        raw.split(',').map(Rational::parse).collect()
    }

    fn opt_rationals(&self, key: &str) -> Result<Option<Vec<Rational>>> {
        match self.flags.get(key) {
            None => Ok(None),
            Some(raw) => Ok(Some(
                raw.split(',').map(Rational::parse).collect::<Result<_>>()?,
            )),
        }
    }

    fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        match self.flags.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::Parse(format!("bad integer for --{key}: {v:?}"))),
        }
    }

    fn suite_config(&self) -> Result<SuiteConfig> {
        let d = SuiteConfig::default();
        Ok(SuiteConfig {
            dim: self.u64_or("dim", d.dim as u64)? as usize,
            depth: self.u64_or("depth", d.depth as u64)? as u32,
            policy: self
                .flags
                .get("policy")
                .cloned()
                .unwrap_or_else(|| d.policy.clone()),
            seed: self.u64_or("seed", d.seed)?,
            samples: self.u64_or("samples", d.samples as u64)? as usize,
        })
    }

    fn grid(&self) -> Result<DyadicGrid> {
        self.suite_config()?.grid()
    }

    fn out_format(&self) -> Result<OutFormat> {
        match self.flags.get("out").map(String::as_str) {
            None | Some("json") => Ok(OutFormat::Json),
            Some("csv") => Ok(OutFormat::Csv),
            Some(other) => Err(Error::Parse(format!(
                "unknown output format {other:?} (expected json|csv)"
            ))),
        }
    }

    fn emit(&self, json: serde_json::Value, csv_lines: Vec<String>) -> Result<()> {
        let text = match self.out_format()? {
            OutFormat::Json => {
                serde_json::to_string_pretty(&json).map_err(|e| Error::Io(e.to_string()))?
            }
            OutFormat::Csv => csv_lines.join("\n"),
        };
        match self.flags.get("output") {
            Some(path) => std::fs::write(path, text + "\n")?,
            None => println!("{text}"),
        }
        Ok(())
    }
}

enum OutFormat {
    Json,
    Csv,
}

fn report_csv(rep: &VerificationReport) -> Vec<String> {
    let mut lines = vec!["anchor,lhs,rhs,margin,pass".to_string()];
    for c in &rep.checks {
        lines.push(format!(
            "{},{},{},{},{}",
            c.anchor, c.lhs.0, c.rhs.0, c.margin.0, c.pass
        ));
    }
    lines
}

fn dispatch(args: &[String]) -> Result<i32> {
    let parsed = parse_args(args)?;
    let mut words = parsed.positional.iter().map(String::as_str);
    match words.next() {
        Some("constants") => {
            parsed.expect_flags(&["weights", "p", "r"])?;
            cmd_constants(&parsed)
        }
        Some("exponents") => match words.next() {
            Some("derive") => {
                parsed.expect_flags(&["p", "r"])?;
                cmd_derive(&parsed)
            }
            Some("path") => {
                parsed.expect_flags(&["p", "q", "r"])?;
                cmd_path(&parsed)
            }
            Some("interval") => {
                parsed.expect_flags(&["p", "q", "r", "s"])?;
                cmd_interval(&parsed)
            }
            Some("admissible") => {
                parsed.expect_flags(&["r"])?;
                cmd_admissible(&parsed)
            }
            other => {
                eprintln!("{USAGE}");
                Err(Error::Parse(format!("unknown exponents action {other:?}")))
            }
        },
        Some("verify") => match words.next() {
            Some(suite) => {
                parsed.expect_flags(&["r", "zeta"])?;
                cmd_verify(suite, &parsed)
            }
            None => {
                eprintln!("{USAGE}");
                Err(Error::Parse("verify needs a suite name".into()))
            }
        },
        Some("sparse") => match words.next() {
            Some("build") => {
                parsed.expect_flags(&["zeta"])?;
                cmd_sparse_build(&parsed)
            }
            Some("eval") => {
                parsed.expect_flags(&["family", "r", "inputs", "h"])?;
                cmd_sparse_eval(&parsed)
            }
            other => {
                eprintln!("{USAGE}");
                Err(Error::Parse(format!("unknown sparse action {other:?}")))
            }
        },
        Some("report") => {
            parsed.expect_flags(&[])?;
            cmd_report(&parsed)
        }
        other => {
            eprintln!("{USAGE}");
            Err(Error::Parse(format!("unknown command {other:?}")))
        }
    }
}

fn exponent_config(parsed: &Parsed) -> Result<ExponentConfig> {
    ExponentConfig::new(parsed.rationals("p")?, parsed.rationals("r")?)
}

fn cmd_constants(parsed: &Parsed) -> Result<i32> {
    let grid = parsed.grid()?;
    let cfg = exponent_config(parsed)?;
    let raw = parsed
        .flags
        .get("weights")
        .ok_or_else(|| Error::Parse("missing required flag --weights".into()))?;
    let specs: Vec<WeightSpec> = raw
        .split(',')
        .map(WeightSpec::parse)
        .collect::<Result<_>>()?;
    if specs.len() != cfg.m() {
        return Err(Error::DimensionMismatch(format!(
            "need {} weight specs, got {}",
            cfg.m(),
            specs.len()
        )));
    }
    let weights = specs
        .iter()
        .map(|s| s.realize(&grid))
        .collect::<Result<Vec<_>>>()?;
    let wv = VectorWeight::new(weights, cfg)?;
    let k = ml_constant(&wv, &grid)?;
    let finite = k.is_finite();
    parsed.emit(
        serde_json::json!({
            "constant": if finite { serde_json::json!(k.raw()) } else { serde_json::json!("inf") },
            "finite": finite,
            "dim": grid.dim(),
            "depth": grid.depth(),
        }),
        vec!["constant,finite".into(), format!("{},{}", k, finite)],
    )?;
    Ok(if finite { 0 } else { 3 })
}

fn cmd_derive(parsed: &Parsed) -> Result<i32> {
    let cfg = exponent_config(parsed)?;
    let d = cfg.derived()?;
    let join = |xs: &[Rational]| {
        xs.iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(";")
    };
    parsed.emit(
        serde_json::to_value(&d).map_err(|e| Error::Io(e.to_string()))?,
        vec![
            "field,value".into(),
            format!("rbar,{}", d.rbar),
            format!("inv_pm1,{}", d.inv_pm1),
            format!("delta,{}", join(&d.delta)),
            format!("theta,{}", join(&d.theta)),
            format!("rho,{}", d.rho),
        ],
    )?;
    Ok(0)
}

fn cmd_path(parsed: &Parsed) -> Result<i32> {
    let p = parsed.rationals("p")?;
    let q = parsed.rationals("q")?;
    let r = parsed.rationals("r")?;
    let steps = exponents::extrapolation_path(&p, &q, &r)?;
    let all_ok = steps
        .iter()
        .all(|s| s.certificates.iter().all(|c| c.satisfied));
    let join = |xs: &[Rational]| {
        xs.iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(";")
    };
    let mut csv = vec!["step,changed_index,from,to,certified".to_string()];
    for (i, s) in steps.iter().enumerate() {
        csv.push(format!(
            "{},{},{},{},{}",
            i,
            s.changed_index,
            join(&s.from),
            join(&s.to),
            s.certificates.iter().all(|c| c.satisfied),
        ));
    }
    parsed.emit(
        serde_json::to_value(&steps).map_err(|e| Error::Io(e.to_string()))?,
        csv,
    )?;
    Ok(if all_ok { 0 } else { 1 })
}

fn cmd_interval(parsed: &Parsed) -> Result<i32> {
    if let Some(q) = parsed.opt_rationals("q")? {
        let r = parsed.rationals("r")?;
        if q.len() != 2 || r.len() != 3 {
            return Err(Error::DimensionMismatch(
                "power-weight interval needs --q a,b and --r a,b,c".into(),
            ));
        }
        let (lo, hi) = exponents::power_weight_interval(&[q[0], q[1]], &[r[0], r[1], r[2]])?;
        parsed.emit(
            serde_json::json!({
                "lower": lo.to_string(),
                "upper": hi.to_string(),
                "empty": lo >= hi,
            }),
            vec![
                "lower,upper,empty".into(),
                format!("{lo},{hi},{}", lo >= hi),
            ],
        )?;
        return Ok(0);
    }
    let p = parsed.rationals("p")?;
    if p.len() != 2 {
        return Err(Error::DimensionMismatch(
            "bilinear interval needs --p a,b".into(),
        ));
    }
    let s = parsed.opt_rationals("s")?;
    let s_arr = match s {
        None => None,
        Some(v) if v.len() == 2 => Some([v[0], v[1]]),
        Some(_) => {
            return Err(Error::DimensionMismatch("--s needs two entries".into()));
        }
    };
    let iv = exponents::bh_power_interval(&[p[0], p[1]], s_arr.as_ref())?;
    parsed.emit(
        serde_json::to_value(&iv).map_err(|e| Error::Io(e.to_string()))?,
        vec![
            "lower,upper,empty".into(),
            format!("{},{},{}", iv.lower, iv.upper, iv.empty),
        ],
    )?;
    Ok(0)
}

fn cmd_admissible(parsed: &Parsed) -> Result<i32> {
    let r = parsed.rationals("r")?;
    if r.len() != 3 {
        return Err(Error::DimensionMismatch(
            "admissibility needs --r a,b,c".into(),
        ));
    }
    let triple = [r[0], r[1], r[2]];
    let strict = exponents::bht_admissible(&triple)?;
    let closed = exponents::bht_boundary_admissible(&triple)?;
    parsed.emit(
        serde_json::json!({"admissible": strict, "boundary_admissible": closed}),
        vec![
            "admissible,boundary_admissible".into(),
            format!("{strict},{closed}"),
        ],
    )?;
    Ok(0)
}

fn cmd_verify(suite: &str, parsed: &Parsed) -> Result<i32> {
    let config = parsed.suite_config()?;
    let rep = if suite == "sparse-bound"
        && (parsed.flags.contains_key("r") || parsed.flags.contains_key("zeta"))
    {
        let r = parsed
            .opt_rationals("r")?
            .unwrap_or_else(|| vec![Rational::one(); 3]);
        let zeta = match parsed.flags.get("zeta") {
            Some(z) => Rational::parse(z)?,
            None => Rational::new(1, 2),
        };
        verify::run_sparse_bound(&config, &r, zeta)?
    } else {
        verify::run_suite(suite, &config)?
    };
    for c in &rep.checks {
        eprintln!(
            "{} {} (margin {:.3e})",
            if c.pass { "pass" } else { "FAIL" },
            c.anchor,
            c.margin.0
        );
    }
    parsed.emit(
        serde_json::to_value(&rep).map_err(|e| Error::Io(e.to_string()))?,
        report_csv(&rep),
    )?;
    Ok(if rep.pass { 0 } else { 1 })
}

fn cmd_report(parsed: &Parsed) -> Result<i32> {
    let config = parsed.suite_config()?;
    let mut reports = Vec::new();
    let mut pass = true;
    for suite in verify::SUITES {
        let rep = verify::run_suite(suite, &config)?;
        eprintln!("{} {suite}", if rep.pass { "pass" } else { "FAIL" });
        pass &= rep.pass;
        reports.push(rep);
    }
    let mut csv = Vec::new();
    for rep in &reports {
        csv.extend(report_csv(rep));
    }
    parsed.emit(serde_json::json!({"reports": reports, "pass": pass}), csv)?;
    Ok(if pass { 0 } else { 1 })
}

fn cmd_sparse_build(parsed: &Parsed) -> Result<i32> {
    let config = parsed.suite_config()?;
    let grid = DyadicGrid::new(config.dim, config.depth, Policy::Dyadic)?;
    let zeta = Rational::parse(
        parsed
            .flags
            .get("zeta")
            .ok_or_else(|| Error::Parse("missing required flag --zeta".into()))?,
    )?;
    let fam = sparse::random_sparse(&grid, zeta, config.seed)?;
    let rec = fam.to_record()?;
    parsed.emit(
        serde_json::to_value(&rec).map_err(|e| Error::Io(e.to_string()))?,
        vec![
            "cubes,zeta".into(),
            format!("{},{}", rec.len(), fam.zeta()),
        ],
    )?;
    Ok(0)
}

fn cmd_sparse_eval(parsed: &Parsed) -> Result<i32> {
    let config = parsed.suite_config()?;
    let grid = DyadicGrid::new(config.dim, config.depth, Policy::Dyadic)?;
    let fam_path = parsed
        .flags
        .get("family")
        .ok_or_else(|| Error::Parse("missing required flag --family".into()))?;
    let text = std::fs::read_to_string(fam_path)?;
    let rec: SparseFamilyRecord =
        serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
    let fam = sparse::SparseFamily::from_record(&rec, grid)?;
    if !fam.is_sparse() {
        return Err(Error::InvalidParameter(
            "family fails the sparsity check".into(),
        ));
    }
    let r = parsed.rationals("r")?;
    let inputs_raw = parsed
        .flags
        .get("inputs")
        .ok_or_else(|| Error::Parse("missing required flag --inputs".into()))?;
    let fs = inputs_raw
        .split(',')
        .map(|p| GridFunction::load_csv(grid, Path::new(p)))
        .collect::<Result<Vec<_>>>()?;
    let h_path = parsed
        .flags
        .get("h")
        .ok_or_else(|| Error::Parse("missing required flag --h".into()))?;
    let h = GridFunction::load_csv(grid, Path::new(h_path))?;
    let value = sparse::sparse_form(&fam, &r, &fs, &h)?;
    parsed.emit(
        serde_json::json!({"form": value, "cubes": fam.cubes().len()}),
        vec![
            "form,cubes".into(),
            format!("{value},{}", fam.cubes().len()),
        ],
    )?;
    Ok(0)
}
