use serde::{Deserialize, Serialize};

use super::FillSequence;
use crate::error::{Result, TcaError};
use crate::scalar::Scalar;

/// One time bin of observed market data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketBin<T> {
    pub k: usize,
    pub price: T,
    pub volume: T,
}

/// Observed market prices and volumes plus the reference prices needed by
/// the open, close and arrival benchmarks.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketTape<T> {
    pub bins: Vec<MarketBin<T>>,
    pub open: T,
    pub close: T,
    pub start: T,
}

impl<T: Scalar> MarketTape<T> {
    /// Tape whose open and arrival prices default to the first bin's price
    /// and whose close defaults to the last bin's price.
    pub fn from_bins(bins: Vec<MarketBin<T>>) -> Result<Self> {
        let (first, last) = match (bins.first(), bins.last()) {
            (Some(f), Some(l)) => (f.price, l.price),
            _ => return Err(TcaError::invalid("market tape needs at least one bin")),
        };
        let tape = MarketTape {
            bins,
            open: first,
            close: last,
            start: first,
        };
        tape.check()?;
        Ok(tape)
    }

    pub fn with_open(mut self, p: T) -> Self {
        self.open = p;
        self
    }

    pub fn with_close(mut self, p: T) -> Self {
        self.close = p;
        self
    }

    pub fn with_start(mut self, p: T) -> Self {
        self.start = p;
        self
    }

    pub fn total_volume(&self) -> T {
        self.bins.iter().map(|b| b.volume).sum()
    }

    fn check(&self) -> Result<()> {
        let mut out = Vec::new();
        if self.bins.is_empty() {
            out.push("market tape needs at least one bin".to_string());
        }
        for b in &self.bins {
            if !b.price.is_finite() || !b.volume.is_finite() {
                out.push(format!("non-finite value in bin {}", b.k));
            } else if b.volume < T::zero() {
                out.push(format!("negative volume {} in bin {}", b.volume, b.k));
            }
        }
        for (name, v) in [("open", self.open), ("close", self.close), ("start", self.start)] {
            if !v.is_finite() {
                out.push(format!("{name} price must be finite"));
            }
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(TcaError::Validation(out))
        }
    }

    /// Reads `k,price,volume` CSV with a header row.
    pub fn read_csv<R: std::io::Read>(reader: R) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            k: usize,
            price: f64,
            volume: f64,
        }
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut bins = Vec::new();
        for rec in rdr.deserialize::<Row>() {
            let r = rec?;
            bins.push(MarketBin {
                k: r.k,
                price: T::of(r.price),
                volume: T::of(r.volume),
            });
        }
        Self::from_bins(bins)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum BenchmarkKind<T> {
    /// Time-weighted average price.
    Twap,
    /// Volume-weighted average price.
    Vwap,
    /// Participation-weighted price for participation rate `rate`.
    Pwp { rate: T },
    /// Market open.
    Mo,
    /// Market close.
    Mc,
    /// Arrival price (implementation shortfall).
    Is,
}

impl<T: Scalar> BenchmarkKind<T> {
    pub fn name(&self) -> String {
        match self {
            BenchmarkKind::Twap => "twap".into(),
            BenchmarkKind::Vwap => "vwap".into(),
            BenchmarkKind::Pwp { rate } => format!("pwp({rate})"),
            BenchmarkKind::Mo => "mo".into(),
            BenchmarkKind::Mc => "mc".into(),
            BenchmarkKind::Is => "is".into(),
        }
    }
}

fn positive_volume<T: Scalar>(tape: &MarketTape<T>) -> Result<T> {
    let v = tape.total_volume();
    if v > T::zero() {
        Ok(v)
    } else {
        Err(TcaError::Domain(
            "benchmark needs positive total market volume".to_string(),
        ))
    }
}

/// Benchmark price of `kind` over `tape`:
/// TWAP `(1/K) Σ p_k`, VWAP `(1/V) Σ ν_k p_k`, PWP `η Σ ν_k p_k`,
/// MO `p_O`, MC `p_C`, IS `p_0`.
pub fn benchmark_price<T: Scalar>(kind: BenchmarkKind<T>, tape: &MarketTape<T>) -> Result<T> {
    tape.check()?;
    Ok(match kind {
        BenchmarkKind::Twap => tape.bins.iter().map(|b| b.price).sum::<T>() / T::of_usize(tape.bins.len()),
        BenchmarkKind::Vwap => {
            let v = positive_volume(tape)?;
            tape.bins.iter().map(|b| b.volume * b.price).sum::<T>() / v
        }
        BenchmarkKind::Pwp { rate } => {
            if !(T::zero()..=T::one()).contains(&rate) {
                return Err(TcaError::invalid(format!(
                    "participation rate must lie in [0, 1], got {rate}"
                )));
            }
            positive_volume(tape)?;
            rate * tape.bins.iter().map(|b| b.volume * b.price).sum::<T>()
        }
        BenchmarkKind::Mo => tape.open,
        BenchmarkKind::Mc => tape.close,
        BenchmarkKind::Is => tape.start,
    })
}

/// Signed cost `(ξ/N) Σ (n^exe p^exe - n^bmk p^bmk)` against a benchmark
/// schedule: `N/K` per bin for TWAP, `ν_k N / V` for VWAP, `η ν_k` for PWP,
/// and the executed shares themselves for MO/MC/IS. Positive means the
/// execution beat the benchmark.
pub fn cost_vs_benchmark<T: Scalar>(
    fills: &FillSequence<T>,
    tape: &MarketTape<T>,
    kind: BenchmarkKind<T>,
    xi: T,
    total_shares: T,
) -> Result<T> {
    if !(total_shares > T::zero()) || !total_shares.is_finite() {
        return Err(TcaError::invalid(format!(
            "order size must be positive, got {total_shares}"
        )));
    }
    let v = fills.violations(None);
    if !v.is_empty() {
        return Err(TcaError::Validation(v));
    }
    let price = benchmark_price(kind, tape)?;
    let bench_notional = match kind {
        BenchmarkKind::Twap | BenchmarkKind::Vwap => total_shares * price,
        BenchmarkKind::Pwp { .. } => price,
        BenchmarkKind::Mo | BenchmarkKind::Mc | BenchmarkKind::Is => fills.total_shares() * price,
    };
    Ok(xi / total_shares * (fills.notional() - bench_notional))
}
