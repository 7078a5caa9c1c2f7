use std::collections::BTreeMap;
use std::io::Cursor;

use proptest::prelude::*;
use trafficscope::ingest::{parse_connections, parse_timestamp_size, split_connections, ConnectionKey};
use trafficscope::{Event, PacketTrace, SessionBitmap};

/// Timestamps on a 1/8 grid keep every bin boundary exact.
fn events() -> impl Strategy<Value = Vec<Event>> {
    prop::collection::vec((0u32..4000, 1u32..1500), 1..300).prop_map(|v| {
        v.into_iter()
            .map(|(t, s)| Event::new(t as f64 / 8.0, s as f64))
            .collect()
    })
}

proptest! {
    #[test]
    fn binning_conserves_bytes(ev in events(), shift in 0u32..3) {
        let trace = PacketTrace::from_unsorted(ev).unwrap();
        let width = 0.25 * (1 << shift) as f64;
        let binned = trace.bin(width).unwrap();
        prop_assert_eq!(binned.total(), trace.total_size());
    }

    #[test]
    fn refinement_consistency(ev in events()) {
        let trace = PacketTrace::from_unsorted(ev).unwrap();
        let fine = trace.bin(0.25).unwrap();
        let coarse = trace.bin(0.5).unwrap();
        let summed: Vec<f64> = fine.values().chunks(2).map(|c| c.iter().sum()).collect();
        prop_assert_eq!(summed.as_slice(), coarse.values());
        let halved = fine.coarsen(2).unwrap();
        prop_assert_eq!(halved.values(), &coarse.values()[..fine.len() / 2]);
    }

    #[test]
    fn bitmap_is_indicator_of_positive_bins(ev in events()) {
        let trace = PacketTrace::from_unsorted(ev).unwrap();
        let binned = trace.bin(0.5).unwrap();
        let bitmap = trace.to_bitmap(0.5).unwrap();
        let expected: Vec<bool> = binned.values().iter().map(|v| *v > 0.0).collect();
        prop_assert_eq!(bitmap.bits(), expected.as_slice());
        let back = SessionBitmap::from_values(0.5, &bitmap.to_values()).unwrap();
        prop_assert_eq!(back, bitmap);
    }

    #[test]
    fn connections_partition_the_packet_view(
        rows in prop::collection::vec((0u32..10_000, 1u32..2000, 0usize..4, 0usize..3), 1..200)
    ) {
        let hosts = ["10.0.0.1", "10.0.0.2", "192.168.1.9", "h"];
        let ports = ["80", "443", "5000"];
        let mut text = String::from("# synthetic\n");
        for (t, size, h, p) in &rows {
            text.push_str(&format!(
                "{}.{:03} {size} {} srv {} {}\n",
                t / 1000,
                t % 1000,
                hosts[*h],
                ports[*p],
                ports[(*p + 1) % 3]
            ));
        }
        let whole = parse_timestamp_size(Cursor::new(&text)).unwrap();
        let parts = split_connections(Cursor::new(&text)).unwrap();

        let mut merged: Vec<(u64, u64)> = Vec::new();
        for (key, trace) in &parts {
            let direct = parse_connections(Cursor::new(&text), key).unwrap();
            prop_assert_eq!(&direct, trace);
            merged.extend(trace.events().iter().map(|e| (e.timestamp.to_bits(), e.size.to_bits())));
        }
        let mut original: Vec<(u64, u64)> =
            whole.events().iter().map(|e| (e.timestamp.to_bits(), e.size.to_bits())).collect();
        merged.sort_unstable();
        original.sort_unstable();
        prop_assert_eq!(merged, original);
    }
}

#[test]
fn parsing_is_deterministic() {
    let text = "0.5 100 a b 1 2\n0.1 40 a b 1 2\n0.3 60 c d 3 4\n";
    let a = split_connections(Cursor::new(text)).unwrap();
    let b = split_connections(Cursor::new(text)).unwrap();
    assert_eq!(a, b);
    let key = ConnectionKey::parse("a,b,1,2").unwrap();
    let events = a[&key].events();
    assert_eq!(events.len(), 2);
    assert!(events[0].timestamp < events[1].timestamp);
    let counts: BTreeMap<String, usize> = a.iter().map(|(k, t)| (k.to_string(), t.len())).collect();
    assert_eq!(counts.values().sum::<usize>(), 3);
}
