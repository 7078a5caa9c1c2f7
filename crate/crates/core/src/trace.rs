//! Core trace types: raw packet events, fixed-width bins, per-connection
//! bitmaps and power-of-two views.
//!
//! Bins are half-open, `[i·Δ, (i+1)·Δ)`, so every event is assigned to exactly
//! one bin and binning conserves the total size.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One packet emission: a timestamp in seconds and a size in bytes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub timestamp: f64,
    pub size: f64,
}

impl Event {
    pub fn new(timestamp: f64, size: f64) -> Self {
        Self { timestamp, size }
    }
}

/// An ordered sequence of packet events.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PacketTrace {
    events: Vec<Event>,
}

impl PacketTrace {
    /// Builds a trace from events that are already in timestamp order.
    pub fn new(events: Vec<Event>) -> Result<Self> {
        for (idx, ev) in events.iter().enumerate() {
            validate_event(ev, idx)?;
        }
        if events.windows(2).any(|w| w[1].timestamp < w[0].timestamp) {
            return Err(Error::invalid("event timestamps must be nondecreasing"));
        }
        Ok(Self { events })
    }

    /// Builds a trace from events in arbitrary order. Equal timestamps keep
    /// their input order.
    pub fn from_unsorted(mut events: Vec<Event>) -> Result<Self> {
        for (idx, ev) in events.iter().enumerate() {
            validate_event(ev, idx)?;
        }
        events.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
        Ok(Self { events })
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Largest timestamp, or 0 for an empty trace.
    pub fn duration(&self) -> f64 {
        self.events.last().map_or(0.0, |e| e.timestamp)
    }

    pub fn total_size(&self) -> f64 {
        self.events.iter().map(|e| e.size).sum()
    }

    /// Sums event sizes into bins of width `bin_width`.
    pub fn bin(&self, bin_width: f64) -> Result<BinnedTrace> {
        let count = self.bin_count(bin_width)?;
        let mut values = vec![0.0; count];
        for ev in &self.events {
            values[bin_index(ev.timestamp, bin_width, count)] += ev.size;
        }
        Ok(BinnedTrace { bin_width, values })
    }

    /// Marks every bin that holds at least one event, ignoring sizes.
    pub fn to_bitmap(&self, bin_width: f64) -> Result<SessionBitmap> {
        let count = self.bin_count(bin_width)?;
        let mut bits = vec![false; count];
        for ev in &self.events {
            bits[bin_index(ev.timestamp, bin_width, count)] = true;
        }
        Ok(SessionBitmap { bin_width, bits })
    }

    fn bin_count(&self, bin_width: f64) -> Result<usize> {
        if !(bin_width > 0.0 && bin_width.is_finite()) {
            return Err(Error::invalid(format!(
                "bin width must be positive, got {bin_width}"
            )));
        }
        if self.events.is_empty() {
            return Err(Error::EmptyInput("packet trace has no events".into()));
        }
        Ok((self.duration() / bin_width).floor() as usize + 1)
    }
}

fn validate_event(ev: &Event, idx: usize) -> Result<()> {
    if !(ev.timestamp >= 0.0 && ev.timestamp.is_finite()) {
        return Err(Error::invalid(format!(
            "event {idx}: timestamp must be finite and nonnegative, got {}",
            ev.timestamp
        )));
    }
    if !(ev.size >= 0.0 && ev.size.is_finite()) {
        return Err(Error::invalid(format!(
            "event {idx}: size must be finite and nonnegative, got {}",
            ev.size
        )));
    }
    Ok(())
}

#[inline]
fn bin_index(t: f64, bin_width: f64, count: usize) -> usize {
    ((t / bin_width).floor() as usize).min(count - 1)
}

/// Traffic summed over consecutive bins of equal width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedTrace {
    bin_width: f64,
    values: Vec<f64>,
}

impl BinnedTrace {
    pub fn new(bin_width: f64, values: Vec<f64>) -> Result<Self> {
        if !(bin_width > 0.0 && bin_width.is_finite()) {
            return Err(Error::invalid(format!(
                "bin width must be positive, got {bin_width}"
            )));
        }
        if let Some(idx) = values.iter().position(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::invalid(format!(
                "bin {idx}: value must be finite and nonnegative, got {}",
                values[idx]
            )));
        }
        Ok(Self { bin_width, values })
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Sums groups of `factor` consecutive bins; a trailing partial group is
    /// dropped.
    pub fn coarsen(&self, factor: usize) -> Result<BinnedTrace> {
        if factor == 0 {
            return Err(Error::invalid("coarsening factor must be positive"));
        }
        let values = self
            .values
            .chunks_exact(factor)
            .map(|c| c.iter().sum())
            .collect();
        Ok(BinnedTrace {
            bin_width: self.bin_width * factor as f64,
            values,
        })
    }

    /// Keeps the longest power-of-two prefix.
    pub fn truncate_to_power_of_two(&self) -> Result<DyadicView> {
        DyadicView::truncate(&self.values)
    }
}

/// 0/1 activity indicator of a single connection over fixed-width bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionBitmap {
    bin_width: f64,
    bits: Vec<bool>,
}

impl SessionBitmap {
    pub fn new(bin_width: f64, bits: Vec<bool>) -> Result<Self> {
        if !(bin_width > 0.0 && bin_width.is_finite()) {
            return Err(Error::invalid(format!(
                "bin width must be positive, got {bin_width}"
            )));
        }
        Ok(Self { bin_width, bits })
    }

    /// Parses a vector of 0/1 values; anything else is rejected.
    pub fn from_values(bin_width: f64, values: &[f64]) -> Result<Self> {
        let bits = values
            .iter()
            .enumerate()
            .map(|(i, v)| match *v {
                x if x == 0.0 => Ok(false),
                x if x == 1.0 => Ok(true),
                x => Err(Error::invalid(format!("bit {i}: expected 0 or 1, got {x}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(bin_width, bits)
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn ones(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn to_values(&self) -> Vec<f64> {
        self.bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
    }
}

/// A sequence whose length is exactly `2^m`, `m ≥ 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadicView {
    values: Vec<f64>,
    m: u32,
}

impl DyadicView {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::invalid(format!(
                "dyadic view needs a power-of-two length of at least 2, got {n}"
            )));
        }
        Ok(Self {
            m: n.trailing_zeros(),
            values,
        })
    }

    /// Keeps the first `2^m` values, `2^m` the largest power of two not
    /// exceeding the input length.
    pub fn truncate(values: &[f64]) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::EmptyInput(format!(
                "need at least 2 values for a dyadic view, got {}",
                values.len()
            )));
        }
        let m = usize::BITS - 1 - values.len().leading_zeros();
        Ok(Self {
            values: values[..1usize << m].to_vec(),
            m,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn trace(events: &[(f64, f64)]) -> PacketTrace {
        PacketTrace::new(events.iter().map(|&(t, s)| Event::new(t, s)).collect()).unwrap()
    }

    #[test]
    fn one_event_per_bin() {
        let b = trace(&[(0.5, 100.0), (1.5, 200.0)]).bin(1.0).unwrap();
        assert_eq!(b.values(), &[100.0, 200.0]);
    }

    #[test]
    fn boundary_event_goes_to_upper_bin() {
        let b = trace(&[(0.0, 10.0), (0.999, 20.0), (1.0, 30.0)])
            .bin(1.0)
            .unwrap();
        assert_eq!(b.values(), &[30.0, 30.0]);
    }

    #[test]
    fn bin_errors() {
        let t = trace(&[(0.5, 1.0)]);
        assert!(matches!(t.bin(0.0), Err(Error::InvalidArgument(_))));
        assert!(matches!(t.bin(-1.0), Err(Error::InvalidArgument(_))));
        assert!(matches!(
            PacketTrace::default().bin(1.0),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn rejects_unsorted_and_negative() {
        assert!(PacketTrace::new(vec![Event::new(2.0, 1.0), Event::new(1.0, 1.0)]).is_err());
        assert!(PacketTrace::new(vec![Event::new(1.0, -1.0)]).is_err());
        let t = PacketTrace::from_unsorted(vec![Event::new(2.0, 1.0), Event::new(1.0, 2.0)])
            .unwrap();
        assert_eq!(t.events()[0], Event::new(1.0, 2.0));
    }

    #[test]
    fn bitmap_marks_occupied_bins() {
        let bm = trace(&[(0.5, 100.0), (2.5, 1.0)]).to_bitmap(1.0).unwrap();
        assert_eq!(bm.bits(), &[true, false, true]);
        let bm = trace(&[(0.1, 1.0), (5.2, 1.0)]).to_bitmap(1.0).unwrap();
        assert_eq!(bm.bits(), &[true, false, false, false, false, true]);
    }

    #[test]
    fn truncation_to_power_of_two() {
        let v = DyadicView::truncate(&vec![1.0; 1000]).unwrap();
        assert_eq!((v.len(), v.m()), (512, 9));
        let v = DyadicView::truncate(&vec![1.0; 1024]).unwrap();
        assert_eq!((v.len(), v.m()), (1024, 10));
        let v = DyadicView::truncate(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((v.values(), v.m()), (&[1.0, 2.0][..], 1));
        assert!(matches!(
            DyadicView::truncate(&[1.0]),
            Err(Error::EmptyInput(_))
        ));
        assert!(DyadicView::new(vec![0.0; 3]).is_err());
    }

    #[test]
    fn poisson_trace_conserves_bytes() {
        use rand::{Rng, SeedableRng};
        use rand_distr::{Distribution, Exp};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let gaps = Exp::new(1.0).unwrap();
        let mut t = 0.0;
        let mut events = Vec::with_capacity(10_000);
        for _ in 0..10_000 {
            t += gaps.sample(&mut rng);
            events.push(Event::new(t, rng.random_range(40..1500) as f64));
        }
        let tr = PacketTrace::new(events).unwrap();
        let width = tr.duration() / 1023.5;
        let b = tr.bin(width).unwrap();
        assert_eq!(b.len(), 1024);
        let direct: f64 = tr.events().iter().map(|e| e.size).sum();
        assert_eq!(b.total(), direct);
    }

    proptest! {
        #[test]
        fn conservation_and_refinement(
            raw in proptest::collection::vec((0u32..4000, 1u32..2000), 1..200)
        ) {
            // timestamps on a 1/1000 grid so that Δ=0.25 and 2Δ=0.5 align exactly
            let events: Vec<Event> = raw
                .iter()
                .map(|&(t, s)| Event::new(t as f64 / 1000.0, s as f64))
                .collect();
            let tr = PacketTrace::from_unsorted(events).unwrap();
            let fine = tr.bin(0.25).unwrap();
            let coarse = tr.bin(0.5).unwrap();
            prop_assert_eq!(fine.total(), tr.total_size());
            let mut paired: Vec<f64> = fine.values().chunks(2).map(|c| c.iter().sum()).collect();
            paired.resize(coarse.len(), 0.0);
            prop_assert_eq!(paired, coarse.values().to_vec());

            let bm = tr.to_bitmap(0.25).unwrap();
            let occupied: Vec<bool> = fine.values().iter().map(|v| *v > 0.0).collect();
            prop_assert_eq!(bm.bits(), &occupied[..]);
        }
    }
}
