//! Block-confirmation lag, execution time and throughput over transaction timelines.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tx::TxKind;

/// Per-transaction timestamps as observed by one peer. Times are simulated
/// milliseconds; execution times may be fractional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TxTimeline {
    pub tx_id: String,
    pub kind: TxKind,
    pub exe_start_ms: f64,
    pub exe_done_ms: f64,
    pub confirmed_ms: f64,
    pub block_height: u64,
    pub cpu_us: u64,
    pub net_bytes: u64,
}

impl TxTimeline {
    pub fn is_ordered(&self) -> bool {
        self.exe_start_ms <= self.exe_done_ms && self.exe_done_ms <= self.confirmed_ms
    }
}

/// `(t_i, t_j]` over the timelines of N peers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsWindow {
    pub t_i_ms: f64,
    pub t_j_ms: f64,
    pub peers: Vec<Vec<TxTimeline>>,
}

impl MetricsWindow {
    pub fn new(t_i_ms: f64, t_j_ms: f64, peers: Vec<Vec<TxTimeline>>) -> Self {
        MetricsWindow { t_i_ms, t_j_ms, peers }
    }

    /// A window spanning every confirmation in the given timelines.
    pub fn covering(peers: Vec<Vec<TxTimeline>>, t_i_ms: f64) -> Self {
        let t_j_ms = peers.iter().flatten().map(|t| t.confirmed_ms).fold(t_i_ms, f64::max);
        MetricsWindow { t_i_ms, t_j_ms, peers }
    }

    fn check(&self) -> Result<()> {
        // NaN bounds compare as None and are rejected too
        if self.t_j_ms.partial_cmp(&self.t_i_ms) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::DegenerateWindow { t_i_ms: self.t_i_ms, t_j_ms: self.t_j_ms });
        }
        Ok(())
    }

    fn in_window<'a>(&self, peer: &'a [TxTimeline]) -> Vec<&'a TxTimeline> {
        peer.iter().filter(|t| t.confirmed_ms > self.t_i_ms && t.confirmed_ms <= self.t_j_ms).collect()
    }

    fn average(&self, per_peer: impl Fn(&[&TxTimeline]) -> f64) -> Result<f64> {
        self.check()?;
        if self.peers.is_empty() {
            return Err(Error::EmptyWindow);
        }
        let mut sum = 0.0;
        for peer in &self.peers {
            let txs = self.in_window(peer);
            if txs.is_empty() {
                return Err(Error::EmptyWindow);
            }
            sum += per_peer(&txs);
        }
        Ok(sum / self.peers.len() as f64)
    }
}

/// Mean confirmation lag behind the last execution in the same block, in
/// seconds per transaction, averaged over peers.
pub fn compute_bttt(window: &MetricsWindow) -> Result<f64> {
    window.average(|txs| {
        let mut last_done: BTreeMap<u64, f64> = BTreeMap::new();
        for t in txs {
            let e = last_done.entry(t.block_height).or_insert(f64::NEG_INFINITY);
            *e = e.max(t.exe_done_ms);
        }
        let lag: f64 = txs.iter().map(|t| t.confirmed_ms - last_done[&t.block_height]).sum();
        lag / txs.len() as f64 / 1000.0
    })
}

/// Mean execution time in seconds per transaction, averaged over peers.
pub fn compute_cet(window: &MetricsWindow) -> Result<f64> {
    window.average(|txs| {
        let busy: f64 = txs.iter().map(|t| t.exe_done_ms - t.exe_start_ms).sum();
        busy / txs.len() as f64 / 1000.0
    })
}

/// Confirmations per second inside the window, averaged over peers. An
/// empty window yields zero.
pub fn compute_throughput(window: &MetricsWindow) -> Result<f64> {
    window.check()?;
    if window.peers.is_empty() {
        return Ok(0.0);
    }
    let span_s = (window.t_j_ms - window.t_i_ms) / 1000.0;
    let sum: f64 = window.peers.iter().map(|p| window.in_window(p).len() as f64 / span_s).sum();
    Ok(sum / window.peers.len() as f64)
}

const CSV_HEADER: [&str; 8] =
    ["tx_id", "kind", "exe_start_ms", "exe_done_ms", "confirmed_ms", "block_height", "cpu_us", "net_bytes"];

/// CSV export with a header row, written even when there are no rows.
pub fn timelines_to_csv(timelines: &[TxTimeline]) -> String {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory writer");
    for t in timelines {
        w.serialize(t).expect("timeline rows always serialize");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv output is UTF-8")
}

/// Parses the CSV export (header row required). Rows whose timestamps are
/// out of order or not finite are rejected.
pub fn parse_timeline_csv(text: &str) -> Result<Vec<TxTimeline>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, row) in r.deserialize::<TxTimeline>().enumerate() {
        let line = i + 2;
        let t = row.map_err(|e| Error::parse(line, e))?;
        let finite = [t.exe_start_ms, t.exe_done_ms, t.confirmed_ms].iter().all(|v| v.is_finite());
        if !finite || !t.is_ordered() {
            return Err(Error::parse(line, "timestamps must be finite with start <= done <= confirmed"));
        }
        out.push(t);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tl(block: u64, start: f64, done: f64, confirmed: f64) -> TxTimeline {
        TxTimeline {
            tx_id: format!("{block}-{start}"),
            kind: TxKind::CheckAccess,
            exe_start_ms: start,
            exe_done_ms: done,
            confirmed_ms: confirmed,
            block_height: block,
            cpu_us: 305,
            net_bytes: 104,
        }
    }

    fn one_peer(txs: Vec<TxTimeline>) -> MetricsWindow {
        MetricsWindow::new(0.0, 10_000.0, vec![txs])
    }

    #[test]
    fn bttt_examples() {
        assert!((compute_bttt(&one_peer(vec![tl(1, 0.0, 100.0, 500.0)])).unwrap() - 0.4).abs() < 1e-12);
        assert_eq!(compute_bttt(&one_peer(vec![tl(1, 0.0, 500.0, 500.0)])).unwrap(), 0.0);
        let two = one_peer(vec![tl(1, 0.0, 100.0, 500.0), tl(1, 100.0, 120.0, 500.0)]);
        assert!((compute_bttt(&two).unwrap() - 0.38).abs() < 1e-12);
        assert_eq!(compute_bttt(&one_peer(vec![])).unwrap_err().code(), "EmptyWindow");
    }

    #[test]
    fn cet_examples() {
        assert!((compute_cet(&one_peer(vec![tl(1, 0.0, 2.0, 500.0)])).unwrap() - 0.002).abs() < 1e-12);
        let three = one_peer(vec![tl(1, 0.0, 1.0, 500.0), tl(1, 1.0, 3.0, 500.0), tl(1, 3.0, 6.0, 500.0)]);
        assert!((compute_cet(&three).unwrap() - 0.002).abs() < 1e-12);
        let peers = MetricsWindow::new(0.0, 1_000.0, vec![vec![tl(1, 0.0, 2.0, 500.0)], vec![tl(1, 0.0, 4.0, 500.0)]]);
        assert!((compute_cet(&peers).unwrap() - 0.003).abs() < 1e-12);
    }

    #[test]
    fn throughput_examples() {
        let hundred: Vec<_> = (0..100).map(|i| tl(i, 0.0, 0.0, 100.0 * i as f64 + 1.0)).collect();
        assert_eq!(compute_throughput(&one_peer(hundred.clone())).unwrap(), 10.0);
        assert_eq!(compute_throughput(&one_peer(vec![])).unwrap(), 0.0);
        let dense: Vec<_> = (0..100).map(|i| tl(i, 0.0, 0.0, 50.0 * i as f64 + 1.0)).collect();
        let w = MetricsWindow::new(0.0, 5_000.0, vec![hundred[..50].to_vec(), dense]);
        assert_eq!(compute_throughput(&w).unwrap(), 15.0);
        let bad = MetricsWindow::new(5.0, 5.0, vec![]);
        assert_eq!(compute_throughput(&bad).unwrap_err().code(), "DegenerateWindow");
    }

    #[test]
    fn window_is_half_open() {
        let w = MetricsWindow::new(500.0, 1_000.0, vec![vec![tl(1, 0.0, 1.0, 500.0), tl(2, 0.0, 1.0, 1_000.0)]]);
        assert_eq!(compute_throughput(&w).unwrap(), 2.0);
    }

    #[test]
    fn csv_round_trip() {
        let rows = vec![tl(1, 0.1, 0.405, 500.0), tl(2, 500.0, 500.0 + 1.0 / 3.0, 1_000.0)];
        let text = timelines_to_csv(&rows);
        assert!(text.starts_with("tx_id,kind,exe_start_ms,exe_done_ms,confirmed_ms,block_height,cpu_us,net_bytes\n"));
        assert_eq!(parse_timeline_csv(&text).unwrap(), rows);
        let bad = text.replace("500.0,1,", "0.0,1,");
        assert_eq!(parse_timeline_csv(&bad).unwrap_err().code(), "ParseError");
    }
}
