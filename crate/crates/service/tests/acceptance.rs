//! Service acceptance: end-to-end matching with a stub scorer and snapshot
//! consistency under concurrent ingestion. Prints one PASS/FAIL line.

mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use axum::http::StatusCode;
use common::*;
use serde_json::Value;

async fn end_to_end() -> Result<String, String> {
    let f = fixture(true, |_| {});
    let faqs = synthetic_faqs(1000, "v1");
    let (s, body) = call(&f.router, "POST", "/v1/faqs", Some(as_jsonl(&faqs))).await;
    if s != StatusCode::OK || body["ingested"] != 1000 {
        return Err(format!("ingest returned {s} {body}"));
    }
    let mut latencies = Vec::new();
    for i in (0..1000).step_by(37) {
        let q = faqs[i]["question"].as_str().unwrap();
        let t = Instant::now();
        let (s, body) = ask(&f.router, q).await;
        latencies.push(t.elapsed());
        if s != StatusCode::OK || body["matches"][0]["id"] != faqs[i]["id"] {
            return Err(format!("verbatim query {i} answered {s} {}", body["matches"][0]));
        }
    }
    let (s, body) = ask(&f.router, "zebra glacier violin").await;
    if s != StatusCode::OK || body["matches"] != Value::Array(vec![]) {
        return Err(format!("no-overlap query answered {s} {body}"));
    }
    latencies.sort();
    let p50 = latencies[latencies.len() / 2];
    if p50 >= Duration::from_secs(1) {
        return Err(format!("p50 latency {p50:?}"));
    }
    Ok(format!("1000 FAQs, {} verbatim queries at rank 1, empty 200 on no overlap, p50 {p50:.2?}", latencies.len()))
}

async fn swap_stress() -> Result<String, String> {
    const FAQS: usize = 50;
    const REQUESTS: usize = 10_000;
    let f = fixture(true, |c| {
        c.filter_threshold = 0.0;
        c.decision_threshold = 0.0;
        c.max_results = FAQS;
    });
    call(&f.router, "POST", "/v1/faqs", Some(as_jsonl(&synthetic_faqs(FAQS, "gen-0")))).await;

    let stop = std::sync::Arc::new(std::sync::atomic::AtomicBool::new(false));
    let writer = {
        let router = f.router.clone();
        let stop = stop.clone();
        tokio::spawn(async move {
            let mut gen = 0;
            while !stop.load(std::sync::atomic::Ordering::Relaxed) {
                gen += 1;
                let payload = as_jsonl(&synthetic_faqs(FAQS, &format!("gen-{gen}")));
                let (s, _) = call(&router, "POST", "/v1/faqs", Some(payload)).await;
                assert_eq!(s, StatusCode::OK);
            }
            gen
        })
    };

    let mut readers = tokio::task::JoinSet::new();
    let per_task = REQUESTS / 50;
    for _ in 0..50 {
        let router = f.router.clone();
        readers.spawn(async move {
            let mut mixed = 0;
            let mut seen = BTreeSet::new();
            for _ in 0..per_task {
                let (s, body) = ask(&router, "fever cough masks travel pets schools").await;
                assert_eq!(s, StatusCode::OK);
                let tags: BTreeSet<String> = body["matches"]
                    .as_array()
                    .unwrap()
                    .iter()
                    .map(|m| m["answer"].as_str().unwrap().split(':').next().unwrap().to_string())
                    .collect();
                if tags.len() != 1 || body["matches"].as_array().unwrap().len() != FAQS {
                    mixed += 1;
                }
                seen.extend(tags);
            }
            (mixed, seen)
        });
    }
    let mut mixed = 0;
    let mut seen = BTreeSet::new();
    while let Some(r) = readers.join_next().await {
        let (m, s) = r.map_err(|e| e.to_string())?;
        mixed += m;
        seen.extend(s);
    }
    stop.store(true, std::sync::atomic::Ordering::Relaxed);
    let swaps = writer.await.map_err(|e| e.to_string())?;
    if mixed > 0 {
        return Err(format!("{mixed} mixed reads in {REQUESTS} requests"));
    }
    if seen.len() < 2 {
        return Err("readers never observed a swap; stress test is vacuous".into());
    }
    Ok(format!(
        "{REQUESTS} requests, {swaps} snapshot swaps, {} generations observed, 0 mixed reads",
        seen.len()
    ))
}

fn main() {
    let single = tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap();
    let multi = tokio::runtime::Builder::new_multi_thread().worker_threads(4).enable_all().build().unwrap();
    let start = Instant::now();
    let outcome = single
        .block_on(end_to_end())
        .and_then(|a| multi.block_on(swap_stress()).map(|b| format!("{a}; {b}")));
    let took = start.elapsed();
    let ok = match &outcome {
        Ok(detail) => {
            println!("PASS  service end-to-end: {detail} [{took:.2?}]");
            true
        }
        Err(detail) => {
            println!("FAIL  service end-to-end: {detail} [{took:.2?}]");
            false
        }
    };
    println!("acceptance: {} passed, {} failed", u8::from(ok), u8::from(!ok));
    if !ok {
        std::process::exit(1);
    }
}
