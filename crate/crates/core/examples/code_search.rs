//! Bounded search for feedforward label codes with a prescribed shortest-event
//! determinant profile.
//!
//! For each delay the two taps are restricted to label pairs whose three
//! nonzero combinations all sit in cosets at least as deep as the target
//! step. Among combinations where some shortest event attains the profile
//! exactly, a deterministic sample is ranked by the weakest longer event.
//! The winner is printed as explicit tables for `configs/`.
//!
//! Usage: cargo run --example code_search -- <E8|L8> <profile...>
//! e.g.   cargo run --example code_search -- L8 4 1 2 4

use gsttcm::lattice::{BinaryLinearCode, PartitionChain};
use gsttcm::trellis::{enumerate_events, shortest_events, TrellisCode};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SAMPLE: usize = 4000;

fn chain(name: &str) -> PartitionChain {
    let c1 = BinaryLinearCode::from_strings(&["11111111", "11110000", "11001100", "10101010"]).unwrap();
    let c2 = BinaryLinearCode::from_strings(&["11110000", "00001111"]).unwrap();
    match name {
        "E8" => PartitionChain::new("E8", vec![(c1, 2)]).unwrap(),
        "L8" => PartitionChain::new("L8", vec![(c1, 2), (c2, 4)]).unwrap(),
        _ => panic!("unknown partition {name}"),
    }
}

/// Weakest longer event (nonzero steps, total det), then fewest shortest
/// events attaining the profile.
fn score(trellis: &TrellisCode, chain: &PartitionChain) -> (usize, u64, usize) {
    let s = trellis.declared_s();
    let events = enumerate_events(trellis, chain, s + 2);
    let mut nonzero = usize::MAX;
    let mut total = u64::MAX;
    for e in events.iter().filter(|e| e.len() > s) {
        nonzero = nonzero.min(e.det_steps.iter().filter(|&&d| d > 0).count());
        total = total.min(e.det_steps.iter().sum());
    }
    let se = shortest_events(&events).unwrap();
    let exact = events
        .iter()
        .filter(|e| e.len() == s && e.det_steps == se.profile)
        .count();
    (nonzero, total, usize::MAX - exact)
}

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let chain = chain(&args[0]);
    let profile: Vec<u64> = args[1..].iter().map(|a| a.parse().unwrap()).collect();
    let labels = chain.num_labels() as u32;
    let class = |l: u32| if l == 0 { 0 } else { chain.coset_min_det(l) };

    let per_delay: Vec<Vec<[u32; 2]>> = profile
        .iter()
        .map(|&p| {
            let mut out = Vec::new();
            for g0 in 1..labels {
                for g1 in g0 + 1..labels {
                    if class(g0) >= p && class(g1) >= p && class(g0 ^ g1) >= p {
                        out.push([g0, g1]);
                    }
                }
            }
            out
        })
        .collect();
    eprintln!(
        "candidates per delay: {:?}",
        per_delay.iter().map(Vec::len).collect::<Vec<_>>()
    );

    // combinations where one nonzero input attains the profile exactly
    let stride = profile.len();
    let mut admissible: Vec<u16> = Vec::new();
    let mut idx = vec![0usize; profile.len()];
    'outer: loop {
        let taps: Vec<[u32; 2]> = idx.iter().enumerate().map(|(j, &i)| per_delay[j][i]).collect();
        let exact = (1..4u32).any(|u| {
            taps.iter().zip(&profile).all(|(g, &p)| {
                let l = if u & 1 == 1 { g[0] } else { 0 } ^ if u & 2 == 2 { g[1] } else { 0 };
                class(l) == p
            })
        });
        if exact {
            admissible.extend(idx.iter().map(|&i| i as u16));
        }
        for j in (0..idx.len()).rev() {
            idx[j] += 1;
            if idx[j] < per_delay[j].len() {
                continue 'outer;
            }
            idx[j] = 0;
        }
        break;
    }
    let count = admissible.len() / stride;
    eprintln!("admissible combinations: {count}");

    let mut order: Vec<usize> = (0..count).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0x7ce11);
    order.shuffle(&mut rng);
    let mut best: Option<((usize, u64, usize), TrellisCode)> = None;
    for &c in order.iter().take(SAMPLE) {
        let taps: Vec<Vec<u32>> = admissible[c * stride..(c + 1) * stride]
            .iter()
            .enumerate()
            .map(|(j, &i)| per_delay[j][i as usize].to_vec())
            .collect();
        let code = TrellisCode::feedforward(2, chain.label_bits(), &taps).unwrap();
        let events = enumerate_events(&code, &chain, code.declared_s());
        let se = shortest_events(&events).unwrap();
        if se.profile != profile || !se.realized {
            continue;
        }
        let sc = score(&code, &chain);
        if best.as_ref().is_none_or(|(b, _)| sc > *b) {
            eprintln!("taps {taps:?} score {sc:?}");
            best = Some((sc, code));
        }
    }
    let (_, code) = best.expect("no code found");
    println!("states = {}", code.num_states());
    println!("declared_s = {}", code.declared_s());
    println!("begin trellis");
    for s in 0..code.num_states() {
        let row: Vec<String> = (0..4u32)
            .map(|u| format!("{}/{}", code.next(s, u), code.label(s, u)))
            .collect();
        println!("  {}", row.join(" "));
    }
    println!("end");
}
