//! Command driver. Exit codes: 0 = all requested certificates verified;
//! 1 = a certificate failed verification (witness printed); 2 = input or
//! parse error; 3 = inconclusive (interval too wide).

use std::collections::BTreeMap;
use std::io::IsTerminal;

use num_complex::Complex;

use doeblin::decompose::doeblin_split;
use doeblin::drift::{verify_drift, verify_minorization, DriftCertificate, RbOptions, SplitEngine};
use doeblin::eigen::eigen_oracle;
use doeblin::ergodic::{ergodic_decay_check, period_detect, stationary, ErgodicOptions};
use doeblin::essrad::re_upper_doeblin;
use doeblin::{Error as CoreError, Kernel64, Measure64, WeightFn, WindowFn64};

use crate::builtins::{build_reflected_walk, seeded_chain};
use crate::conze::{conze_raugi_residual, ConzeError, USpec};
use crate::format::KernelSpecFile;
use crate::report::{verdict, IntervalDto, OracleSummary, QcReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CERT_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;

fn color_enabled() -> bool {
    std::env::var_os("NO_COLOR").is_none() && std::io::stdout().is_terminal()
}

fn exit_code_for(err: &CoreError) -> i32 {
    match err {
        CoreError::DriftViolated { .. }
        | CoreError::NotMinorized { .. }
        | CoreError::NotMarkov { .. }
        | CoreError::DoeblinViolated { .. }
        | CoreError::NotDominated { .. }
        | CoreError::NotUniformlyIntegrable { .. }
        | CoreError::EnvelopeViolated { .. }
        | CoreError::NoConvergence(_) => EXIT_CERT_FAILED,
        CoreError::Inconclusive(_) | CoreError::Divergent => EXIT_INCONCLUSIVE,
        _ => EXIT_INPUT,
    }
}

struct ParsedArgs {
    positional: Vec<String>,
    flags: BTreeMap<String, String>,
}

fn parse_args(args: &[String]) -> Result<ParsedArgs, String> {
    let mut positional = Vec::new();
    let mut flags = BTreeMap::new();
    let mut i = 0;
    while i < args.len() {
        let a = &args[i];
        if let Some(name) = a.strip_prefix("--") {
            let value = args
                .get(i + 1)
                .ok_or_else(|| format!("flag --{name} needs a value"))?;
            if flags.insert(name.to_string(), value.clone()).is_some() {
                return Err(format!("flag --{name} given twice"));
            }
            i += 2;
        } else {
            positional.push(a.clone());
            i += 1;
        }
    }
    Ok(ParsedArgs { positional, flags })
}

impl ParsedArgs {
    fn take(&mut self, name: &str) -> Option<String> {
        self.flags.remove(name)
    }
    fn take_parsed<T: std::str::FromStr>(&mut self, name: &str) -> Result<Option<T>, String> {
        match self.flags.remove(name) {
            None => Ok(None),
            Some(v) => v
                .parse::<T>()
                .map(Some)
                .map_err(|_| format!("flag --{name}: cannot parse {v:?}")),
        }
    }
    fn finish(self) -> Result<(), String> {
        if let Some(stray) = self.positional.first() {
            return Err(format!("unexpected argument {stray:?}"));
        }
        if let Some((name, _)) = self.flags.into_iter().next() {
            return Err(format!("unknown flag --{name}"));
        }
        Ok(())
    }
}

fn load_spec(path: &str) -> Result<KernelSpecFile, (i32, String)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| (EXIT_INPUT, format!("cannot read {path}: {e}")))?;
    KernelSpecFile::parse(&text).map_err(|e| {
        (
            EXIT_INPUT,
            format!("{path}:{}:{}: {e}", e.line(), e.column()),
        )
    })
}

fn write_out(out: Option<&String>, content: &str) -> Result<(), (i32, String)> {
    if let Some(path) = out {
        std::fs::write(path, content)
            .map_err(|e| (EXIT_INPUT, format!("cannot write {path}: {e}")))?;
    }
    Ok(())
}

const USAGE: &str = "\
usage: doeblin <command> [flags]

commands:
  analyze  --kernel FILE [--window N] [--out FILE]
           certified essential-radius bounds via the Doeblin-tail route
  certify  --kernel FILE [--drift-r1 X] [--drift-eta X] [--minorize-b X] [--out FILE]
           drift/minorization pipeline: r_b and the bound r_e^w <= 1/r_b
  spectrum --kernel FILE [--out FILE]
           dense eigenvalue dump (finite spaces only)
  ergodic  --kernel FILE [--nmax N] [--out FILE]
           stationary distribution, period, decay envelope
  example walk --p X --x-max N [--out FILE]
  example conze-raugi [--u half|sine|affine] [--lambda X] [--lambda-im Y]
                      [--amp A] [--terms N] [--grid G] [--out FILE]
  example seeded --states N --seed S [--out FILE]

exit codes: 0 verified, 1 certificate failed, 2 input error, 3 inconclusive
";

pub fn cli_run(args: &[String]) -> i32 {
    match dispatch(args) {
        Ok(code) => code,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            code
        }
    }
}

fn dispatch(args: &[String]) -> Result<i32, (i32, String)> {
    let Some(command) = args.first() else {
        print!("{USAGE}");
        return Ok(EXIT_INPUT);
    };
    let rest = &args[1..];
    match command.as_str() {
        "analyze" => cmd_analyze(rest),
        "certify" => cmd_certify(rest),
        "spectrum" => cmd_spectrum(rest),
        "ergodic" => cmd_ergodic(rest),
        "example" => cmd_example(rest),
        "help" | "--help" | "-h" => {
            print!("{USAGE}");
            Ok(EXIT_OK)
        }
        other => Err((EXIT_INPUT, format!("unknown command {other:?}"))),
    }
}

fn flags_of(rest: &[String]) -> Result<ParsedArgs, (i32, String)> {
    parse_args(rest).map_err(|m| (EXIT_INPUT, m))
}

fn require_kernel(args: &mut ParsedArgs) -> Result<(KernelSpecFile, String), (i32, String)> {
    let path = args
        .take("kernel")
        .ok_or((EXIT_INPUT, "--kernel FILE is required".to_string()))?;
    let spec = load_spec(&path)?;
    Ok((spec, path))
}

fn oracle_summary(k: &Kernel64, w: Option<&WeightFn<f64>>) -> Option<OracleSummary> {
    eigen_oracle(k, w).ok().map(|spec| OracleSummary {
        dimension: spec.len(),
        top_moduli: spec.iter().take(8).map(|c| c.norm()).collect(),
    })
}

fn cmd_analyze(rest: &[String]) -> Result<i32, (i32, String)> {
    let mut args = flags_of(rest)?;
    let (spec, path) = require_kernel(&mut args)?;
    let window: Option<usize> = args.take_parsed("window").map_err(|m| (EXIT_INPUT, m))?;
    let out = args.take("out");
    args.finish().map_err(|m| (EXIT_INPUT, m))?;

    let mut kernel = spec.kernel().map_err(|e| (EXIT_INPUT, e.to_string()))?;
    let mut weight = spec.weight_fn().map_err(|e| (EXIT_INPUT, e.to_string()))?;
    if let Some(n) = window {
        kernel = kernel
            .restrict_window(n)
            .map_err(|e| (EXIT_INPUT, e.to_string()))?;
        if let Some(w) = &weight {
            weight = Some(
                doeblin::WeightFn::new(kernel.space(), w.values()[..=n].to_vec(), w.tail_model())
                    .map_err(|e| (EXIT_INPUT, e.to_string()))?,
            );
        }
    }

    let analysed = if let Some(w) = &weight {
        kernel
            .conjugate(w)
            .map_err(|e| (EXIT_INPUT, e.to_string()))?
    } else {
        kernel.clone()
    };
    // Candidate references: uniform and the normalized row average.
    let uniform = Measure64::uniform(analysed.space());
    let mut avg = Measure64::zero(analysed.space());
    for row in analysed.rows() {
        let kept = row.filter(|s| analysed.space().in_window(s));
        avg = avg
            .add_scaled(1.0 / analysed.space().window_len() as f64, &kept)
            .map_err(|e| (EXIT_INPUT, e.to_string()))?;
    }
    let mut candidates = vec![(1usize, uniform.clone()), (2usize, uniform)];
    if let Ok(avg) = avg.normalized() {
        candidates.push((1, avg));
    }
    let bound =
        re_upper_doeblin(&analysed, &candidates).map_err(|e| (exit_code_for(&e), e.to_string()))?;

    let w_for_radius = weight
        .clone()
        .unwrap_or_else(|| WeightFn::one(kernel.space()));
    let sr = kernel
        .spectral_radius_upper(&w_for_radius, 16)
        .map_err(|e| (exit_code_for(&e), e.to_string()))?;

    let mut report = QcReport::new(
        path,
        if weight.is_some() {
            "doeblin-tail on the w-conjugated kernel"
        } else {
            "doeblin-tail"
        },
    );
    report.spectral_radius = match sr.exact {
        Some(v) => IntervalDto { lo: v, hi: v },
        None => sr.upper.into(),
    };
    report.re_upper = Some(bound.value.into());
    report.quasi_compact = bound.quasi_compact;
    report.push_trace(
        "re_upper.hi",
        &format!("delta_nu(Q^ell)^(1/ell), ell = {}", bound.ell),
        bound.value.hi,
    );
    report.push_trace(
        "spectral_radius.hi",
        "||Q^16||_w^(1/16)",
        report.spectral_radius.hi,
    );
    if kernel.space().is_finite() {
        report.oracle = oracle_summary(&kernel, weight.as_ref());
    }
    // A multiplier block adds the twisted-kernel bounds
    // r(Q_chi) <= |chi| r(Q) and r_e(Q_chi) <= |chi| r_e-bound.
    if let Some(m) = &spec.multiplier {
        let chi = doeblin::Multiplier::fourier(kernel.space(), &m.xi, m.t)
            .map_err(|e| (EXIT_INPUT, e.to_string()))?;
        let r_chi = chi.norm_bound() * report.spectral_radius.hi;
        report.push_trace(
            "multiplier r bound",
            &format!("|chi| * r(Q), chi = exp(i t xi), t = {}", m.t),
            r_chi,
        );
        if let Some(re) = &report.re_upper {
            report.push_trace(
                "multiplier re bound",
                "|chi| * re_upper.hi",
                chi.norm_bound() * re.hi,
            );
        }
        if kernel.space().is_finite() {
            if let Ok(qc) = doeblin::fourier_kernel(&kernel, &m.xi, m.t) {
                if let Ok(spec_chi) = eigen_oracle(&qc, None) {
                    let top = spec_chi.first().map(|c| c.norm()).unwrap_or(0.0);
                    report.push_trace(
                        "multiplier oracle top modulus",
                        "dense spectrum of Q_chi",
                        top,
                    );
                }
            }
        }
    }
    print!("{}", report.render(color_enabled()));
    write_out(out.as_ref(), &report.emit())?;
    Ok(EXIT_OK)
}

fn cmd_certify(rest: &[String]) -> Result<i32, (i32, String)> {
    let mut args = flags_of(rest)?;
    let (spec, path) = require_kernel(&mut args)?;
    let drift_r1: Option<f64> = args.take_parsed("drift-r1").map_err(|m| (EXIT_INPUT, m))?;
    let drift_eta: Option<f64> = args.take_parsed("drift-eta").map_err(|m| (EXIT_INPUT, m))?;
    let minorize_b: Option<f64> = args
        .take_parsed("minorize-b")
        .map_err(|m| (EXIT_INPUT, m))?;
    let out = args.take("out");
    args.finish().map_err(|m| (EXIT_INPUT, m))?;

    let kernel = spec.kernel().map_err(|e| (EXIT_INPUT, e.to_string()))?;
    let weight = spec
        .weight_fn()
        .map_err(|e| (EXIT_INPUT, e.to_string()))?
        .ok_or((EXIT_INPUT, "certify needs a weight block".to_string()))?;
    let mut drift = spec
        .drift_certificate()
        .map_err(|e| (EXIT_INPUT, e.to_string()))?
        .ok_or((EXIT_INPUT, "certify needs a drift certificate".to_string()))?;
    let mut minor = spec
        .minorization_certificate()
        .map_err(|e| (EXIT_INPUT, e.to_string()))?
        .ok_or((
            EXIT_INPUT,
            "certify needs a minorization certificate".to_string(),
        ))?;
    if drift_r1.is_some() || drift_eta.is_some() {
        drift = DriftCertificate::new(
            drift.c().clone(),
            drift.w().clone(),
            drift_r1.unwrap_or_else(|| drift.r1()),
            drift_eta.unwrap_or_else(|| drift.eta()),
        )
        .map_err(|e| (EXIT_INPUT, e.to_string()))?;
    }
    if let Some(b) = minorize_b {
        minor = doeblin::drift::MinorizationCertificate::new(
            minor.c().clone(),
            b,
            minor.nu().clone(),
            minor.density().alpha().to_vec(),
        )
        .map_err(|e| (EXIT_INPUT, e.to_string()))?;
    }

    let mut report = QcReport::new(path, "drift-split: r_e^w <= 1/r_b");
    report.spectral_radius = IntervalDto { lo: 1.0, hi: 1.0 };
    report.push_trace("spectral_radius", "markov: P1 = 1", 1.0);

    // Drift check.
    let check = verify_drift(&kernel, &drift).map_err(|e| (exit_code_for(&e), e.to_string()))?;
    report.verification.insert("drift".into(), check.pass);
    if !check.pass {
        report.witness = Some(format!(
            "drift violated at x = {} (excess {:.3e})",
            check.worst_x, check.worst_excess
        ));
        finish_certify(report, out.as_ref())?;
        return Ok(EXIT_CERT_FAILED);
    }
    // Minorization check.
    match verify_minorization(&kernel, &minor, &weight) {
        Ok(()) => {
            report.verification.insert("minorization".into(), true);
        }
        Err(e) => {
            report.verification.insert("minorization".into(), false);
            report.witness = Some(e.to_string());
            finish_certify(report, out.as_ref())?;
            return Ok(EXIT_CERT_FAILED);
        }
    }
    // Optional Doeblin certificate rides along.
    if let Some(dcert) = spec
        .doeblin_certificate()
        .map_err(|e| (EXIT_INPUT, e.to_string()))?
    {
        match doeblin_split(&kernel, &dcert) {
            Ok((_, s)) => {
                report.verification.insert("doeblin".into(), true);
                report.push_trace("doeblin residual norm", "||Q^ell - T||", s.sup_norm());
            }
            Err(e) => {
                report.verification.insert("doeblin".into(), false);
                report.witness = Some(e.to_string());
                finish_certify(report, out.as_ref())?;
                return Ok(EXIT_CERT_FAILED);
            }
        }
    }

    let engine =
        SplitEngine::new(kernel, drift, minor).map_err(|e| (exit_code_for(&e), e.to_string()))?;
    let profile = match engine.compute_rb(&RbOptions::default()) {
        Ok(p) => p,
        Err(CoreError::Inconclusive(msg)) => {
            report.verification.insert("r_b bisection".into(), false);
            report.witness = Some(msg);
            finish_certify(report, out.as_ref())?;
            return Ok(EXIT_INCONCLUSIVE);
        }
        Err(e) => return Err((exit_code_for(&e), e.to_string())),
    };
    report.r_b = Some(profile.r_b.into());
    let bound = profile.ess_bound();
    report.re_upper = Some(bound.into());
    report.quasi_compact = Some(bound.hi < 1.0);
    report.verification.insert("r_b bisection".into(), true);
    report.push_trace(
        "r_b.lo",
        "bisection of h(r) against 1/(1-b)",
        profile.r_b.lo,
    );
    report.push_trace("re_upper.hi", "1 / r_b.lo", bound.hi);
    finish_certify(report, out.as_ref())?;
    Ok(EXIT_OK)
}

fn finish_certify(report: QcReport, out: Option<&String>) -> Result<(), (i32, String)> {
    print!("{}", report.render(color_enabled()));
    write_out(out, &report.emit())
}

fn cmd_spectrum(rest: &[String]) -> Result<i32, (i32, String)> {
    let mut args = flags_of(rest)?;
    let (spec, path) = require_kernel(&mut args)?;
    let out = args.take("out");
    args.finish().map_err(|m| (EXIT_INPUT, m))?;
    let kernel = spec.kernel().map_err(|e| (EXIT_INPUT, e.to_string()))?;
    if !kernel.space().is_finite() {
        return Err((
            EXIT_INPUT,
            "spectrum needs a finite space (truncate the window first)".into(),
        ));
    }
    let weight = spec.weight_fn().map_err(|e| (EXIT_INPUT, e.to_string()))?;
    let eig =
        eigen_oracle(&kernel, weight.as_ref()).map_err(|e| (exit_code_for(&e), e.to_string()))?;
    #[derive(serde::Serialize)]
    struct SpectrumReport {
        source: String,
        eigenvalues: Vec<(f64, f64)>,
        moduli: Vec<f64>,
    }
    let rep = SpectrumReport {
        source: path,
        eigenvalues: eig.iter().map(|c| (c.re, c.im)).collect(),
        moduli: eig.iter().map(|c| c.norm()).collect(),
    };
    println!("{} eigenvalues; largest moduli:", rep.eigenvalues.len());
    for c in eig.iter().take(8) {
        println!("  {:.12} + {:.12}i  (|.| = {:.12})", c.re, c.im, c.norm());
    }
    let mut text = serde_json::to_string_pretty(&rep).expect("serializable");
    text.push('\n');
    write_out(out.as_ref(), &text)?;
    Ok(EXIT_OK)
}

fn cmd_ergodic(rest: &[String]) -> Result<i32, (i32, String)> {
    let mut args = flags_of(rest)?;
    let (spec, path) = require_kernel(&mut args)?;
    let n_max: usize = args
        .take_parsed("nmax")
        .map_err(|m| (EXIT_INPUT, m))?
        .unwrap_or(200);
    let out = args.take("out");
    args.finish().map_err(|m| (EXIT_INPUT, m))?;
    let kernel = spec.kernel().map_err(|e| (EXIT_INPUT, e.to_string()))?;
    if !kernel.space().is_finite() {
        return Err((EXIT_INPUT, "ergodic needs a finite space".into()));
    }
    let weight = spec
        .weight_fn()
        .map_err(|e| (EXIT_INPUT, e.to_string()))?
        .unwrap_or_else(|| WeightFn::one(kernel.space()));
    let n = kernel.space().window_len();
    let suite: Vec<WindowFn64> = (0..n.min(8))
        .map(|j| {
            let mut vals = vec![0.0; n];
            vals[j] = 1.0f64.min(weight.values()[j]);
            WindowFn64::new(kernel.space(), vals, Some(0.0)).expect("valid test function")
        })
        .collect();
    let rep = ergodic_decay_check(&kernel, &weight, &suite, n_max, &ErgodicOptions::default())
        .map_err(|e| (exit_code_for(&e), e.to_string()))?;
    let stat = stationary(&kernel).map_err(|e| (exit_code_for(&e), e.to_string()))?;
    let d = period_detect(&kernel).map_err(|e| (exit_code_for(&e), e.to_string()))?;

    #[derive(serde::Serialize)]
    struct ErgodicJson {
        source: String,
        pi: Vec<(usize, f64)>,
        residual: f64,
        unique: Option<bool>,
        period: usize,
        kappa: f64,
        envelope_constant: f64,
        measured_log_slope: Option<f64>,
        cesaro_ok: bool,
        decay_table: Vec<(usize, f64, f64)>,
    }
    let json = ErgodicJson {
        source: path,
        pi: stat.pi.entries().to_vec(),
        residual: stat.residual,
        unique: stat.unique,
        period: d,
        kappa: rep.kappa,
        envelope_constant: rep.big_d,
        measured_log_slope: rep.measured_log_slope,
        cesaro_ok: rep.cesaro_ok,
        decay_table: rep.decay_table.clone(),
    };
    println!(
        "period d = {}, kappa = {:.6}, envelope D = {:.6}, cesaro {}",
        d,
        rep.kappa,
        rep.big_d,
        verdict(rep.cesaro_ok, color_enabled())
    );
    if let Some(slope) = rep.measured_log_slope {
        println!("measured log-slope: {slope:.6}");
    }
    let mut text = serde_json::to_string_pretty(&json).expect("serializable");
    text.push('\n');
    write_out(out.as_ref(), &text)?;
    Ok(EXIT_OK)
}

fn cmd_example(rest: &[String]) -> Result<i32, (i32, String)> {
    let Some(which) = rest.first() else {
        return Err((
            EXIT_INPUT,
            "example needs a name: walk | conze-raugi | seeded".into(),
        ));
    };
    let mut args = flags_of(&rest[1..])?;
    match which.as_str() {
        "walk" => {
            let p: f64 = args
                .take_parsed("p")
                .map_err(|m| (EXIT_INPUT, m))?
                .unwrap_or(0.3);
            let x_max: usize = args
                .take_parsed("x-max")
                .map_err(|m| (EXIT_INPUT, m))?
                .unwrap_or(300);
            let out = args.take("out");
            args.finish().map_err(|m| (EXIT_INPUT, m))?;
            let model = build_reflected_walk(p, x_max).map_err(|e| (EXIT_INPUT, e.to_string()))?;
            let file = KernelSpecFile::from_parts(
                &model.kernel,
                Some(&model.w),
                Some(&model.drift),
                Some(&model.minor),
            );
            println!(
                "reflected walk p = {p}, window 0..={x_max}: r1 = {:.12}, target bound {:.12}",
                model.drift.r1(),
                model.rate
            );
            write_out(out.as_ref(), &file.emit())?;
            Ok(EXIT_OK)
        }
        "seeded" => {
            let states: usize = args
                .take_parsed("states")
                .map_err(|m| (EXIT_INPUT, m))?
                .unwrap_or(30);
            let seed: u64 = args
                .take_parsed("seed")
                .map_err(|m| (EXIT_INPUT, m))?
                .unwrap_or(1);
            let out = args.take("out");
            args.finish().map_err(|m| (EXIT_INPUT, m))?;
            let kernel = seeded_chain(states, seed);
            let file = KernelSpecFile::from_parts(&kernel, None, None, None);
            println!("seeded chain: {states} states, seed {seed}");
            write_out(out.as_ref(), &file.emit())?;
            Ok(EXIT_OK)
        }
        "conze-raugi" => {
            let u_name = args.take("u").unwrap_or_else(|| "half".into());
            let amp: f64 = args
                .take_parsed("amp")
                .map_err(|m| (EXIT_INPUT, m))?
                .unwrap_or(0.1);
            let u = match u_name.as_str() {
                "half" => USpec::Half,
                "sine" => USpec::Sine { amp },
                "affine" => USpec::Affine { amp },
                other => return Err((EXIT_INPUT, format!("unknown u {other:?}"))),
            };
            let lambda_re: f64 = args
                .take_parsed("lambda")
                .map_err(|m| (EXIT_INPUT, m))?
                .unwrap_or(0.4);
            let lambda_im: f64 = args
                .take_parsed("lambda-im")
                .map_err(|m| (EXIT_INPUT, m))?
                .unwrap_or(0.0);
            let terms: usize = args
                .take_parsed("terms")
                .map_err(|m| (EXIT_INPUT, m))?
                .unwrap_or(48);
            let grid: usize = args
                .take_parsed("grid")
                .map_err(|m| (EXIT_INPUT, m))?
                .unwrap_or(1024);
            let out = args.take("out");
            args.finish().map_err(|m| (EXIT_INPUT, m))?;
            match conze_raugi_residual(u, Complex::new(lambda_re, lambda_im), terms, grid) {
                Ok(res) => {
                    #[derive(serde::Serialize)]
                    struct ConzeJson {
                        u: String,
                        lambda: (f64, f64),
                        terms: usize,
                        grid: usize,
                        max_residual: f64,
                        tail_bound: f64,
                        within_tail: bool,
                    }
                    let json = ConzeJson {
                        u: u_name,
                        lambda: (lambda_re, lambda_im),
                        terms,
                        grid,
                        max_residual: res.max_residual,
                        tail_bound: res.tail_bound,
                        within_tail: res.within_tail,
                    };
                    println!(
                        "max residual {:.3e}, truncation tail bound {:.3e}: {}",
                        res.max_residual,
                        res.tail_bound,
                        verdict(res.within_tail, color_enabled())
                    );
                    let mut text = serde_json::to_string_pretty(&json).expect("serializable");
                    text.push('\n');
                    write_out(out.as_ref(), &text)?;
                    Ok(if res.within_tail {
                        EXIT_OK
                    } else {
                        EXIT_CERT_FAILED
                    })
                }
                Err(ConzeError::NotAKernel { x, found }) => {
                    println!(
                        "u is not a kernel: partition identity fails at x = {x} (sum {found})"
                    );
                    Ok(EXIT_CERT_FAILED)
                }
                Err(ConzeError::Invalid(m)) => Err((EXIT_INPUT, m)),
            }
        }
        other => Err((EXIT_INPUT, format!("unknown example {other:?}"))),
    }
}
