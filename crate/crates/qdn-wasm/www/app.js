// Demo page wiring: calls the wasm engine and draws on plain canvases.
// Build the pkg/ directory with:
//   wasm-pack build crates/qdn-wasm --target web --out-dir www/pkg

import init, { slit_pattern, epr_coincidences, hsz_coincidences } from "./pkg/qdn_wasm.js";

const COLORS = ["#53b1fd", "#f97066", "#32d583", "#fdb022"];

function clearCanvas(canvas) {
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  return ctx;
}

function drawBars(canvas, values, highlight) {
  const ctx = clearCanvas(canvas);
  const pad = { left: 36, right: 10, top: 12, bottom: 24 };
  const w = canvas.width - pad.left - pad.right;
  const h = canvas.height - pad.top - pad.bottom;
  const max = Math.max(1e-12, ...values);
  const step = w / values.length;
  axes(ctx, canvas, pad, max);
  values.forEach((v, i) => {
    const barH = (v / max) * h;
    ctx.fillStyle = highlight.includes(i) ? "#fdb022" : "#53b1fd";
    ctx.fillRect(pad.left + i * step + step * 0.15, pad.top + h - barH, step * 0.7, barH);
    if (values.length <= 32) {
      ctx.fillStyle = "#94a3b8";
      ctx.font = "10px system-ui";
      ctx.textAlign = "center";
      ctx.fillText(String(i), pad.left + (i + 0.5) * step, canvas.height - 8);
    }
  });
}

function axes(ctx, canvas, pad, max) {
  ctx.strokeStyle = "#2d3748";
  ctx.lineWidth = 1;
  ctx.beginPath();
  ctx.moveTo(pad.left, pad.top);
  ctx.lineTo(pad.left, canvas.height - pad.bottom);
  ctx.lineTo(canvas.width - pad.right, canvas.height - pad.bottom);
  ctx.stroke();
  ctx.fillStyle = "#94a3b8";
  ctx.font = "10px system-ui";
  ctx.textAlign = "right";
  ctx.fillText(max.toFixed(3), pad.left - 4, pad.top + 8);
  ctx.fillText("0", pad.left - 4, canvas.height - pad.bottom);
}

function drawCurves(canvas, xMax, series, marker) {
  const ctx = clearCanvas(canvas);
  const pad = { left: 36, right: 10, top: 12, bottom: 24 };
  const w = canvas.width - pad.left - pad.right;
  const h = canvas.height - pad.top - pad.bottom;
  const yMax = 0.55;
  axes(ctx, canvas, pad, yMax);
  series.forEach((points, s) => {
    ctx.strokeStyle = COLORS[s % COLORS.length];
    ctx.lineWidth = 1.8;
    ctx.beginPath();
    points.forEach(([x, y], i) => {
      const px = pad.left + (x / xMax) * w;
      const py = pad.top + h - (y / yMax) * h;
      if (i === 0) ctx.moveTo(px, py);
      else ctx.lineTo(px, py);
    });
    ctx.stroke();
  });
  if (marker) {
    series.forEach((points, s) => {
      const y = marker.values[s];
      ctx.fillStyle = COLORS[s % COLORS.length];
      ctx.beginPath();
      ctx.arc(
        pad.left + (marker.x / xMax) * w,
        pad.top + h - (y / yMax) * h,
        4, 0, 2 * Math.PI,
      );
      ctx.fill();
    });
  }
}

function fmt(x) {
  return Number(x).toFixed(4);
}

// --- slit panel -----------------------------------------------------------

function refreshSlit() {
  const errorBox = document.getElementById("slit-error");
  try {
    const sites = Number(document.getElementById("slit-sites").value);
    const open = document.getElementById("slit-open").value;
    const kernel = document.getElementById("slit-kernel").value;
    const split = document.getElementById("slit-split").value;
    const pattern = JSON.parse(slit_pattern(sites, open, kernel, split));
    drawBars(document.getElementById("slit-canvas"), pattern.probabilities, pattern.open_slits);
    document.getElementById("slit-readout").innerHTML =
      `open slits <b>${pattern.open_slits.join(", ")}</b> &middot; ` +
      `&Sigma;<sub>j</sub> P<sub>j</sub> = <b>${pattern.total.toFixed(12)}</b>`;
    errorBox.textContent = "";
  } catch (e) {
    errorBox.textContent = String(e);
  }
}

// --- EPR panel ------------------------------------------------------------

function refreshEpr() {
  const errorBox = document.getElementById("epr-error");
  try {
    const theta = Number(document.getElementById("epr-theta").value);
    const phi = Number(document.getElementById("epr-phi").value);
    document.getElementById("epr-theta-value").textContent = theta.toFixed(3);
    document.getElementById("epr-phi-value").textContent = phi.toFixed(3);
    const steps = 96;
    const keys = ["p13", "p24", "p14", "p23"];
    const series = keys.map(() => []);
    for (let i = 0; i <= steps; i++) {
      const t = (i / steps) * Math.PI;
      const point = JSON.parse(epr_coincidences(t, phi));
      keys.forEach((k, s) => series[s].push([t, point[k]]));
    }
    const current = JSON.parse(epr_coincidences(theta, phi));
    drawCurves(document.getElementById("epr-canvas"), Math.PI, series, {
      x: theta,
      values: keys.map((k) => current[k]),
    });
    document.getElementById("epr-readout").innerHTML = keys
      .map((k, s) =>
        `<span class="legend" style="background:${COLORS[s]}"></span>P{${k.slice(1, 2)},${k.slice(2)}} = <b>${fmt(current[k])}</b>`)
      .join(" &nbsp; ") +
      ` &nbsp; P(Alice up) = <b>${fmt(current.alice_up)}</b>`;
    errorBox.textContent = "";
  } catch (e) {
    errorBox.textContent = String(e);
  }
}

// --- HSZ panel --------------------------------------------------------------

function refreshHsz() {
  const errorBox = document.getElementById("hsz-error");
  try {
    const theta = Number(document.getElementById("hsz-theta").value);
    const beamsplitter = document.getElementById("hsz-bs").checked;
    document.getElementById("hsz-theta-value").textContent = theta.toFixed(3);
    const steps = 128;
    const keys = ["p13", "p24", "p14", "p23"];
    const series = keys.map(() => []);
    for (let i = 0; i <= steps; i++) {
      const t = (i / steps) * 2 * Math.PI;
      const point = JSON.parse(hsz_coincidences(t, beamsplitter));
      keys.forEach((k, s) => series[s].push([t, point[k]]));
    }
    const current = JSON.parse(hsz_coincidences(theta, beamsplitter));
    drawCurves(document.getElementById("hsz-canvas"), 2 * Math.PI, series, {
      x: theta,
      values: keys.map((k) => current[k]),
    });
    document.getElementById("hsz-readout").innerHTML = keys
      .map((k, s) =>
        `<span class="legend" style="background:${COLORS[s]}"></span>P{${k.slice(1, 2)},${k.slice(2)}} = <b>${fmt(current[k])}</b>`)
      .join(" &nbsp; ");
    errorBox.textContent = "";
  } catch (e) {
    errorBox.textContent = String(e);
  }
}

// --- boot -------------------------------------------------------------------

async function main() {
  await init();
  for (const id of ["slit-sites", "slit-open", "slit-kernel", "slit-split"]) {
    document.getElementById(id).addEventListener("input", refreshSlit);
  }
  for (const id of ["epr-theta", "epr-phi"]) {
    document.getElementById(id).addEventListener("input", refreshEpr);
  }
  document.getElementById("hsz-theta").addEventListener("input", refreshHsz);
  document.getElementById("hsz-bs").addEventListener("change", refreshHsz);
  refreshSlit();
  refreshEpr();
  refreshHsz();
}

main();
