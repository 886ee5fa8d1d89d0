use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use poslo::coarse::{self, EpochSignature};
use poslo::distill::{self, Distiller, Mode, Scheme};
use poslo::fine::{self, FineSignature};
use poslo::{parallel, EpochBatch, OpCounts, Suite, SuiteConfig};
use rand::rngs::OsRng;
use rand::RngCore;

use crate::files::{self, AnyPublicKey, AnySecretKey, AnySignature, LogReader, SigReader};
use crate::{CliError, Outcome};

pub const SK_FILE: &str = "poslo.sk";
pub const PK_FILE: &str = "poslo.pk";

pub struct KeygenArgs {
    pub fine: bool,
    pub suite: u8,
    pub n1: u32,
    pub n2: u32,
    pub umbrellas: u32,
    pub bpv: Option<(u32, u32)>,
}

pub fn parse_bpv(spec: &str) -> Result<(u32, u32), CliError> {
    let bad = || CliError::Usage(format!("--bpv expects v,k, got {spec:?}"));
    let (v, k) = spec.split_once(',').ok_or_else(bad)?;
    Ok((v.trim().parse().map_err(|_| bad())?, k.trim().parse().map_err(|_| bad())?))
}

pub fn keygen(args: &KeygenArgs, out: &Path) -> Result<Outcome, CliError> {
    let cfg = SuiteConfig::new(Suite::from_id(args.suite)?, args.n1, args.n2, args.umbrellas)?;
    let (sk, pk) = if args.fine {
        let (sk, pk) = fine::keygen(cfg, args.bpv, &mut OsRng)?;
        (sk.to_bytes(), pk.to_bytes())
    } else {
        let (sk, pk) = coarse::keygen(cfg, &mut OsRng)?;
        (sk.to_bytes(), pk.to_bytes())
    };
    fs::create_dir_all(out)?;
    files::write_atomic(&out.join(SK_FILE), &sk)?;
    files::write_atomic(&out.join(PK_FILE), &pk)?;

    println!("scheme={}", if args.fine { "f" } else { "c" });
    println!("suite={}", args.suite);
    println!("n1={} n2={} umbrellas={} depth={}", cfg.n1, cfg.n2, cfg.n_u, cfg.depth());
    println!("capacity={}", cfg.capacity());
    match (args.fine, args.bpv) {
        (true, Some((v, k))) => println!("bpv=v{v},k{k}"),
        (true, None) => println!("bpv=off"),
        _ => println!("commitments={}", cfg.n1),
    }
    println!("sk_bytes={}", sk.len());
    println!("pk_bytes={}", pk.len());
    Ok(Outcome::Valid)
}

fn count_records(path: &Path) -> Result<u64, CliError> {
    let mut reader = LogReader::open(path)?;
    let mut n = 0;
    while reader.next_record()?.is_some() {
        n += 1;
    }
    Ok(n)
}

fn check_entry_sizes(cfg: &SuiteConfig, input: &Path) -> Result<(), CliError> {
    let Some(max) = cfg.suite.max_entry_len() else {
        return Ok(());
    };
    let mut reader = LogReader::open(input)?;
    while let Some(r) = reader.next_record()? {
        if r.len() >= max {
            return Err(poslo::Error::Unsupported { len: r.len() }.into());
        }
    }
    Ok(())
}

pub fn sign(key: &Path, input: &Path, out: &Path) -> Result<Outcome, CliError> {
    let mut sk = AnySecretKey::read(key)?;
    let records = count_records(input)?;
    match &mut sk {
        AnySecretKey::Coarse(inner) => {
            let cfg = *inner.config();
            let n2 = cfg.n2 as u64;
            if records % n2 != 0 {
                return Err(CliError::Format(format!("{records} records is not a multiple of n2 = {n2}")));
            }
            let epochs = records / n2;
            if inner.next_epoch() as u64 + epochs > cfg.n1 as u64 {
                return Err(poslo::Error::Exhausted {
                    epoch: inner.next_epoch() as u64 + epochs - 1,
                    capacity: cfg.n1 as u64,
                }
                .into());
            }
            check_entry_sizes(&cfg, input)?;
        }
        AnySecretKey::Fine(inner) => {
            let cfg = *inner.config();
            if inner.counter() + records > cfg.capacity() {
                return Err(poslo::Error::Exhausted {
                    epoch: inner.counter() + records - 1,
                    capacity: cfg.capacity(),
                }
                .into());
            }
            check_entry_sizes(&cfg, input)?;
        }
    }

    let mut reader = LogReader::open(input)?;
    let mut buf = Vec::new();
    let mut produced = 0u64;
    match &mut sk {
        AnySecretKey::Coarse(inner) => {
            let n2 = inner.config().n2 as usize;
            let mut sigs = files::open_sig_output(out, Scheme::Coarse, inner.next_epoch() as u64)?;
            loop {
                let msgs = reader.take(n2)?;
                if msgs.is_empty() {
                    break;
                }
                let sig = inner.sign_epoch(&msgs)?;
                files::write_atomic(key, &inner.to_bytes())?;
                buf.clear();
                sig.write(&mut buf);
                sigs.write_all(&buf)?;
                sigs.flush()?;
                produced += 1;
            }
            println!("epoch_signatures={produced}");
            println!("next_epoch={}", inner.next_epoch());
        }
        AnySecretKey::Fine(inner) => {
            let n2 = inner.config().n2 as u64;
            let mut sigs = files::open_sig_output(out, Scheme::Fine, inner.counter())?;
            let persist = |inner: &fine::SecretKey, buf: &mut Vec<u8>, sigs: &mut std::io::BufWriter<fs::File>| {
                files::write_atomic(key, &inner.to_bytes())?;
                sigs.write_all(buf)?;
                sigs.flush()?;
                buf.clear();
                Ok::<_, CliError>(())
            };
            while let Some(m) = reader.next_record()? {
                inner.sign(&m, &mut OsRng)?.write(&mut buf);
                produced += 1;
                if inner.counter() % n2 == 0 {
                    persist(inner, &mut buf, &mut sigs)?;
                }
            }
            if !buf.is_empty() {
                persist(inner, &mut buf, &mut sigs)?;
            }
            println!("entry_signatures={produced}");
            println!("next_entry={}", inner.counter());
        }
    }
    Ok(Outcome::Valid)
}

pub fn distill(pk: &Path, logs: &Path, sigs: &Path, ccd_out: &Path) -> Result<Outcome, CliError> {
    let mut pk = AnyPublicKey::read(pk)?;
    let cfg = *pk.config();
    let mut log = LogReader::open(logs)?;
    let mut sig_reader = SigReader::open(sigs)?;
    if sig_reader.header.scheme != pk.scheme() {
        return Err(CliError::Format("signature file and public key use different schemes".into()));
    }
    if sig_reader.header.start != 0 {
        return Err(CliError::Format(format!(
            "signature file starts at index {}, distillation starts at 0",
            sig_reader.header.start
        )));
    }
    let mut distiller = Distiller::new(pk.scheme(), cfg);
    let n2 = cfg.n2 as usize;
    let (mut valid, mut invalid, mut invalid_entries) = (0u32, 0u32, 0u64);
    let mut pending = 0usize;
    loop {
        let msgs = log.take(n2)?;
        if msgs.is_empty() {
            break;
        }
        if msgs.len() < n2 {
            // the stack for an unfinished epoch is not yet public
            pending = msgs.len();
            break;
        }
        let epoch_ok = match &mut pk {
            AnyPublicKey::Coarse(pk) => {
                let Some(AnySignature::Coarse(sig)) = sig_reader.next_signature()? else {
                    return Err(missing_signature(distiller.next_epoch()));
                };
                distiller.distill_coarse(pk, &msgs, &sig)?
            }
            AnyPublicKey::Fine(pk) => {
                let mut sigs: Vec<FineSignature> = Vec::with_capacity(n2);
                for _ in 0..n2 {
                    match sig_reader.next_signature()? {
                        Some(AnySignature::Fine(sig)) => sigs.push(sig),
                        _ => return Err(missing_signature(distiller.next_epoch())),
                    }
                }
                let bad = distiller.distill_fine(pk, &msgs, &sigs)?;
                invalid_entries += bad as u64;
                bad == 0
            }
        };
        if epoch_ok {
            valid += 1;
        } else {
            invalid += 1;
        }
    }
    let ccd = distiller.finish();
    let bytes = ccd.to_bytes();
    files::write_atomic(ccd_out, &bytes)?;

    println!("valid: {valid}");
    println!("invalid: {invalid}");
    if pk.scheme() == Scheme::Fine {
        println!("invalid_entries: {invalid_entries}");
    }
    if pending > 0 {
        println!("pending_entries: {pending}");
    }
    println!("umbrellas: {}", ccd.umbrellas.len());
    println!("ccd_bytes: {}", bytes.len());
    Ok(if invalid == 0 { Outcome::Valid } else { Outcome::Failed })
}

fn missing_signature(epoch: u32) -> CliError {
    CliError::Format(format!("signature file ends before epoch {epoch}"))
}

pub fn verify(pk: &Path, logs: &Path, ccd: &Path, mode: Mode, workers: usize) -> Result<Outcome, CliError> {
    if workers == 0 {
        return Err(poslo::Error::Workers.into());
    }
    let pk = AnyPublicKey::read(pk)?;
    let ccd = distill::Ccd::from_bytes(&fs::read(ccd)?)?;
    if ccd.scheme != pk.scheme() || ccd.cfg != *pk.config() {
        return Err(CliError::Format("archive does not belong to this public key".into()));
    }
    let log = LogReader::open(logs)?.read_all()?;
    let bits = if mode == Mode::Valid && ccd.valid.is_none() {
        // nothing verified during distillation
        vec![false]
    } else {
        distill::sebver(pk.y(), &ccd, &log, mode, workers)?
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for bit in &bits {
        writeln!(out, "{}", u8::from(*bit))?;
    }
    Ok(if bits.iter().all(|b| *b) {
        Outcome::Valid
    } else {
        Outcome::Failed
    })
}

const BENCH_N2: u64 = 256;

/// Geometry used for `entries` benchmark entries: full epochs of at most
/// 256 entries and a power-of-two epoch count.
pub fn bench_geometry(entries: u64) -> (u32, u32) {
    let n2 = entries.clamp(1, BENCH_N2);
    let n1 = entries.div_ceil(n2).next_power_of_two().max(2);
    (n1 as u32, n2 as u32)
}

fn per_sec(entries: u64, secs: f64) -> u64 {
    (entries as f64 / secs.max(1e-9)).round() as u64
}

pub fn bench(suite: u8, entries: u64, entry_size: usize, workers: usize) -> Result<Outcome, CliError> {
    if workers == 0 {
        return Err(poslo::Error::Workers.into());
    }
    if entry_size == 0 {
        return Err(CliError::Usage("--entry-size must be positive".into()));
    }
    let suite = Suite::from_id(suite)?;
    if let Some(max) = suite.max_entry_len() {
        if entry_size >= max {
            return Err(poslo::Error::Unsupported { len: entry_size }.into());
        }
    }
    let (n1, n2) = bench_geometry(entries);
    let cfg = SuiteConfig::new(suite, n1, n2, 1)?;
    let total = cfg.capacity();

    let mut data = vec![0u8; total as usize * entry_size];
    OsRng.fill_bytes(&mut data);
    let logs: Vec<Vec<&[u8]>> = data
        .chunks(entry_size * n2 as usize)
        .map(|epoch| epoch.chunks(entry_size).collect())
        .collect();

    let (mut sk, pk) = coarse::keygen(cfg, &mut OsRng)?;
    let start = Instant::now();
    let (sigs, counts) = OpCounts::measure(|| {
        logs.iter()
            .map(|m| sk.sign_epoch(m))
            .collect::<Result<Vec<EpochSignature>, _>>()
    });
    let sign_secs = start.elapsed().as_secs_f64();
    let sig = coarse::aggregate_signatures(&sigs?).ok_or(CliError::State("nothing was signed".into()))?;

    let batches: Vec<EpochBatch> = logs
        .iter()
        .enumerate()
        .map(|(i, m)| EpochBatch::full(i as u32, m))
        .collect();
    let start = Instant::now();
    let aver_ok = coarse::aver(&pk, &batches, &sig)?;
    let aver_secs = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let paver_ok = parallel::paver(&pk, &batches, &sig, workers)?;
    let paver_secs = start.elapsed().as_secs_f64();

    println!("suite={}", suite.id());
    println!("entries={total}");
    println!("n1={n1}");
    println!("n2={n2}");
    println!("entry_size={entry_size}");
    println!("workers={workers}");
    println!("sign_entries_per_sec={}", per_sec(total, sign_secs));
    println!("aver_entries_per_sec={}", per_sec(total, aver_secs));
    println!("paver_entries_per_sec={}", per_sec(total, paver_secs));
    println!("sign_group_exps={}", counts.exponentiations());
    println!("aver_ok={}", u8::from(aver_ok));
    println!("paver_ok={}", u8::from(paver_ok));
    Ok(if aver_ok && paver_ok {
        Outcome::Valid
    } else {
        Outcome::Failed
    })
}
