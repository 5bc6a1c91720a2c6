import init, { time_acf, visibility_map, phase_map } from "./pkg/irs_gbsm_web.js";

const num = (id) => Number(document.getElementById(id).value);

function run(prefix, body) {
  const status = document.getElementById(`${prefix}-status`);
  status.className = "status";
  status.textContent = "running…";
  // let the status paint before the synchronous call
  setTimeout(() => {
    const t0 = performance.now();
    try {
      body();
      status.textContent = `${((performance.now() - t0) / 1000).toFixed(2)} s`;
    } catch (e) {
      status.className = "status error";
      status.textContent = String(e.message ?? e);
    }
  }, 10);
}

function plotLines(canvas, xs, series) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height, pad = 36;
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, 8, w - pad - 8, h - pad - 8);
  ctx.fillStyle = "#444";
  ctx.fillText("1", 20, 14);
  ctx.fillText("0", 20, h - pad);
  ctx.fillText(`Δt = ${xs[xs.length - 1]} s`, w - 110, h - 12);
  const x = (v) => pad + (v / xs[xs.length - 1]) * (w - pad - 8);
  const y = (v) => 8 + (1 - v) * (h - pad - 8);
  series.forEach(({ values, color, label }, i) => {
    ctx.strokeStyle = color;
    ctx.beginPath();
    values.forEach((v, j) => (j ? ctx.lineTo(x(xs[j]), y(v)) : ctx.moveTo(x(xs[j]), y(v))));
    ctx.stroke();
    ctx.fillStyle = color;
    ctx.fillText(label, pad + 10, h - pad - 12 - 14 * i);
  });
}

function heatmap(canvas, nx, ny, values, color) {
  const ctx = canvas.getContext("2d");
  const img = ctx.createImageData(nx, ny);
  const lo = Math.min(...values), hi = Math.max(...values);
  for (let ix = 0; ix < nx; ix++) {
    for (let iy = 0; iy < ny; iy++) {
      const v = values[ix * ny + iy];
      const [r, g, b] = color(hi > lo ? (v - lo) / (hi - lo) : 0.5);
      const k = 4 * ((ny - 1 - iy) * nx + ix);
      img.data.set([r, g, b, 255], k);
    }
  }
  const tmp = new OffscreenCanvas(nx, ny);
  tmp.getContext("2d").putImageData(img, 0, 0);
  ctx.imageSmoothingEnabled = false;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.drawImage(tmp, 0, 0, canvas.width, canvas.height);
}

const viridisish = (u) => [Math.round(68 + 185 * u), Math.round(1 + 230 * u * (1.2 - u)), Math.round(84 + 60 * (1 - u))];
const hue = (u) => {
  const a = 2 * Math.PI * u;
  return [127 + 127 * Math.cos(a), 127 + 127 * Math.cos(a - 2.094), 127 + 127 * Math.cos(a + 2.094)].map(Math.round);
};

function acf() {
  const r = JSON.parse(time_acf(num("acf-side"), num("acf-k"), num("acf-bits"), num("acf-trials"), num("acf-t"), 1));
  plotLines(document.getElementById("acf-canvas"), r.lags_s, [
    { values: r.continuous, color: "#1f77b4", label: "continuous phases" },
    { values: r.quantized, color: "#d62728", label: `${r.bits}-bit phases` },
  ]);
}

function visibility() {
  const r = JSON.parse(
    visibility_map(num("vis-side"), num("vis-birth"), num("vis-death"), num("vis-ex"), num("vis-ey"), num("vis-seed")),
  );
  heatmap(document.getElementById("vis-count"), r.nx, r.ny, r.counts, viridisish);
  heatmap(document.getElementById("vis-first"), r.nx, r.ny, r.first_cluster, (u) => (u > 0.5 ? [30, 30, 30] : [235, 235, 235]));
  document.getElementById("vis-status").textContent += `, mean visible ${r.mean_visible.toFixed(2)}`;
}

function phases() {
  const r = JSON.parse(phase_map(num("ph-side"), num("ph-fc"), num("ph-bits"), num("ph-t")));
  heatmap(document.getElementById("ph-canvas"), r.mx, r.my, r.phases.map((p) => p / (2 * Math.PI)), hue);
}

await init();
document.getElementById("acf-run").onclick = () => run("acf", acf);
document.getElementById("vis-run").onclick = () => run("vis", () => visibility());
document.getElementById("ph-run").onclick = () => run("ph", phases);
run("ph", phases);
