//! Coefficient verification over a (kind, N, tau) grid.
//!
//! For every grid cell the closed-form mixture is checked against the
//! enumeration route (1e-12 componentwise) and the reconstruction weights
//! against the six left-inverse/row-sum identities (1e-10). Singular cells
//! are flagged and excluded from pass/fail; cells past the enumeration cap
//! keep their closed forms and skip the enumeration comparison.

use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::Args;
use tuplerisk_core::coefficients::{
    mixture_closed_form, mixture_from_enumeration, reconstruction_weights, Priors,
};
use tuplerisk_core::scenario::{ScenarioKind, ScenarioSpec, ENUMERATION_CAP};
use tuplerisk_core::Error;

use crate::config::{parse_scenario_kind, pick, FileConfig};
use crate::manifest::{write_manifest, Manifest};
use crate::CommonArgs;

const MIXTURE_TOL: f64 = 1e-12;
const IDENTITY_TOL: f64 = 1e-10;

#[derive(Args, Debug)]
pub struct VerifyCoeffsArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma-separated scenario kinds (default: all four)
    #[arg(long)]
    pub kinds: Option<String>,
    #[arg(long, default_value_t = 2)]
    pub n_min: usize,
    #[arg(long, default_value_t = 8)]
    pub n_max: usize,
    /// Priors grid: i/tau_den for i in tau_lo..=tau_hi
    #[arg(long, default_value_t = 1)]
    pub tau_lo: u32,
    #[arg(long, default_value_t = 9)]
    pub tau_hi: u32,
    #[arg(long, default_value_t = 10)]
    pub tau_den: u32,
}

struct Cell {
    kind: ScenarioKind,
    n: usize,
    tau: f64,
    status: CellStatus,
}

enum CellStatus {
    Ok {
        mixture_residual: Option<f64>,
        identity_residual: f64,
    },
    Singular,
}

pub fn run(args: VerifyCoeffsArgs) -> Result<ExitCode> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let seed = pick(args.common.seed, file.seed, 0);

    let kinds: Vec<ScenarioKind> = match &args.kinds {
        None => ScenarioKind::ALL.to_vec(),
        Some(list) => list
            .split(',')
            .map(|k| parse_scenario_kind(k.trim()))
            .collect::<Result<_>>()?,
    };
    if args.n_min < 2 || args.n_min > args.n_max {
        bail!("invalid tuple-size range {}..={}", args.n_min, args.n_max);
    }
    if args.tau_lo == 0 || args.tau_hi >= args.tau_den || args.tau_lo > args.tau_hi {
        bail!("invalid prior grid");
    }

    let mut table = String::new();
    table.push_str("kind,n,tau_plus,j,alpha,beta,c1,c2,d1,d2,denom,max_identity_residual\n");
    let mut cells = Vec::new();

    for &kind in &kinds {
        for n in args.n_min..=args.n_max {
            for i in args.tau_lo..=args.tau_hi {
                let tau = i as f64 / args.tau_den as f64;
                let priors = Priors::new(tau)?;
                let closed = mixture_closed_form(kind, n, &priors)?;

                let mixture_residual = if n <= ENUMERATION_CAP {
                    let spec = ScenarioSpec::named(kind, n)?;
                    let by_enum = mixture_from_enumeration(&spec, &priors)?;
                    let mut worst = (closed.z - by_enum.z).abs();
                    for j in 0..n {
                        worst = worst
                            .max((closed.alpha[j] - by_enum.alpha[j]).abs())
                            .max((closed.beta[j] - by_enum.beta[j]).abs());
                    }
                    Some(worst)
                } else {
                    None
                };

                let weights = match reconstruction_weights(&closed, &priors) {
                    Ok(w) => Some(w),
                    Err(Error::SingularMixture { .. }) => None,
                    Err(e) => return Err(e.into()),
                };

                match &weights {
                    Some(w) => {
                        let identity_residual = w.max_identity_residual(&closed, &priors);
                        for j in 0..n {
                            let denom_j = closed.alpha[j] * priors.tau_minus()
                                - closed.beta[j] * priors.tau_plus();
                            table.push_str(&format!(
                                "{},{},{},{},{},{},{},{},{},{},{},{:e}\n",
                                kind.name(),
                                n,
                                tau,
                                j,
                                closed.alpha[j],
                                closed.beta[j],
                                w.c1[j],
                                w.c2[j],
                                w.d1,
                                w.d2,
                                denom_j,
                                identity_residual,
                            ));
                        }
                        cells.push(Cell {
                            kind,
                            n,
                            tau,
                            status: CellStatus::Ok {
                                mixture_residual,
                                identity_residual,
                            },
                        });
                    }
                    None => {
                        for j in 0..n {
                            let denom_j = closed.alpha[j] * priors.tau_minus()
                                - closed.beta[j] * priors.tau_plus();
                            table.push_str(&format!(
                                "{},{},{},{},{},{},,,,,{},SINGULAR\n",
                                kind.name(),
                                n,
                                tau,
                                j,
                                closed.alpha[j],
                                closed.beta[j],
                                denom_j,
                            ));
                        }
                        cells.push(Cell {
                            kind,
                            n,
                            tau,
                            status: CellStatus::Singular,
                        });
                    }
                }
            }
        }
    }

    print!("{table}");

    if let Some(out) = &args.common.out {
        std::fs::create_dir_all(out)?;
        std::fs::write(out.join("coeffs.csv"), &table)?;
        write_manifest(
            out,
            &Manifest::new(
                "verify-coeffs",
                seed,
                serde_json::json!({
                    "kinds": kinds.iter().map(|k| k.name()).collect::<Vec<_>>(),
                    "n_min": args.n_min,
                    "n_max": args.n_max,
                    "tau_lo": args.tau_lo,
                    "tau_hi": args.tau_hi,
                    "tau_den": args.tau_den,
                }),
            ),
        )?;
    }

    let failure = cells.iter().find(|c| match c.status {
        CellStatus::Ok {
            mixture_residual,
            identity_residual,
        } => {
            mixture_residual.is_some_and(|r| r > MIXTURE_TOL) || identity_residual > IDENTITY_TOL
        }
        CellStatus::Singular => false,
    });
    if let Some(cell) = failure {
        if let CellStatus::Ok {
            mixture_residual,
            identity_residual,
        } = cell.status
        {
            eprintln!(
                "verify-coeffs FAILED at kind={} n={} tau={}: mixture residual {:?}, identity residual {:e}",
                cell.kind.name(),
                cell.n,
                cell.tau,
                mixture_residual,
                identity_residual,
            );
        }
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}
