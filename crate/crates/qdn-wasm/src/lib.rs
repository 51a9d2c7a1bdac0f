//! Browser bindings for the detector-network engine: three interactive
//! operations behind `wasm-bindgen`, each returning a JSON payload for the
//! demo page to plot. The functions are ordinary Rust and are unit-tested
//! natively; `wasm-pack build --target web` packages them for the browser.

use num_complex::Complex64;
use serde::Serialize;
use wasm_bindgen::prelude::*;

use qdn::experiments::{
    dft_row_kernel, epr_network, fresnel_kernel, hsz_beamsplitter, hsz_network, slit_network,
    EprSettings, SlitGeometry,
};
use qdn::SignalMonomial;

#[derive(Serialize)]
struct SlitPattern {
    sites: u32,
    open_slits: Vec<u32>,
    probabilities: Vec<f64>,
    amp_re: Vec<f64>,
    amp_im: Vec<f64>,
    total: f64,
}

#[derive(Serialize)]
struct Coincidences {
    p13: f64,
    p24: f64,
    p14: f64,
    p23: f64,
    alice_up: f64,
    alice_down: f64,
}

fn mono(indices: &[u32]) -> SignalMonomial {
    SignalMonomial::from_indices(indices).expect("demo indices are in range")
}

fn parse_indices(text: &str) -> Result<Vec<u32>, String> {
    text.split(',')
        .map(str::trim)
        .filter(|chunk| !chunk.is_empty())
        .map(|chunk| chunk.parse::<u32>().map_err(|_| format!("bad index \"{chunk}\"")))
        .collect()
}

fn parse_complex_list(text: &str) -> Result<Vec<Complex64>, String> {
    text.split(';')
        .map(str::trim)
        .filter(|chunk| !chunk.is_empty())
        .map(|chunk| {
            let mut parts = chunk.splitn(2, ',');
            let re: f64 = parts
                .next()
                .and_then(|p| p.trim().parse().ok())
                .ok_or_else(|| format!("bad pair \"{chunk}\""))?;
            let im: f64 = parts
                .next()
                .and_then(|p| p.trim().parse().ok())
                .ok_or_else(|| format!("bad pair \"{chunk}\""))?;
            Ok(Complex64::new(re, im))
        })
        .collect()
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("payloads serialize")
}

/// Detector probabilities of a slit network on M cyclic sites.
/// `slits` is a comma-separated index list; `split` holds semicolon-separated
/// "re,im" amplitudes over the open slits (empty for an even split);
/// `kernel` is "fresnel" or "dft-row".
#[wasm_bindgen]
pub fn slit_pattern(
    sites: u32,
    slits: &str,
    kernel: &str,
    split: &str,
) -> Result<String, String> {
    let open = parse_indices(slits)?;
    let kernel = match kernel {
        "fresnel" => fresnel_kernel(sites),
        "dft-row" => dft_row_kernel(sites),
        other => return Err(format!("unknown kernel \"{other}\"")),
    };
    let geometry = SlitGeometry::new(sites, &open, kernel).map_err(|e| e.to_string())?;
    let split = if split.trim().is_empty() {
        let even = 1.0 / (geometry.open_slits().len() as f64).sqrt();
        vec![Complex64::new(even, 0.0); geometry.open_slits().len()]
    } else {
        parse_complex_list(split)?
    };
    let program = slit_network(&geometry, &split).map_err(|e| e.to_string())?;
    let output = program.run().map_err(|e| e.to_string())?;
    let mut pattern = SlitPattern {
        sites,
        open_slits: geometry.open_slits().to_vec(),
        probabilities: Vec::with_capacity(sites as usize),
        amp_re: Vec::with_capacity(sites as usize),
        amp_im: Vec::with_capacity(sites as usize),
        total: output.table.total(),
    };
    for j in 0..sites {
        let amp = output
            .final_state
            .amplitude(&mono(&[j]))
            .map_err(|e| e.to_string())?;
        pattern.probabilities.push(amp.norm_sqr());
        pattern.amp_re.push(amp.re);
        pattern.amp_im.push(amp.im);
    }
    Ok(to_json(&pattern))
}

/// EPR coincidence probabilities for Bob's analyzer at (theta, phi).
#[wasm_bindgen]
pub fn epr_coincidences(theta: f64, phi: f64) -> Result<String, String> {
    let settings = EprSettings::new(theta, phi).map_err(|e| e.to_string())?;
    let table = epr_network(settings)
        .map_err(|e| e.to_string())?
        .run()
        .map_err(|e| e.to_string())?
        .table;
    let p13 = table.probability(&mono(&[1, 3]));
    let p24 = table.probability(&mono(&[2, 4]));
    let p14 = table.probability(&mono(&[1, 4]));
    let p23 = table.probability(&mono(&[2, 3]));
    Ok(to_json(&Coincidences {
        p13,
        p24,
        p14,
        p23,
        alice_up: p13 + p14,
        alice_down: p24 + p23,
    }))
}

/// Two-photon coincidence probabilities at source phase theta, optionally
/// after the balanced beamsplitter.
#[wasm_bindgen]
pub fn hsz_coincidences(theta: f64, beamsplitter: bool) -> Result<String, String> {
    let downstream = if beamsplitter {
        vec![hsz_beamsplitter()]
    } else {
        Vec::new()
    };
    let table = hsz_network(theta, &downstream)
        .map_err(|e| e.to_string())?
        .run()
        .map_err(|e| e.to_string())?
        .table;
    let p13 = table.probability(&mono(&[1, 3]));
    let p24 = table.probability(&mono(&[2, 4]));
    let p14 = table.probability(&mono(&[1, 4]));
    let p23 = table.probability(&mono(&[2, 3]));
    Ok(to_json(&Coincidences {
        p13,
        p24,
        p14,
        p23,
        alice_up: p13 + p14,
        alice_down: p24 + p23,
    }))
}
