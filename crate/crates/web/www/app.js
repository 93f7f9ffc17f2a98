import init, { Demo } from "./pkg/advkit_web.js";

const $ = (id) => document.getElementById(id);
const LO = 1, HI = 7, PAD = 30;
let demo = null;
let summary = null;

function toPx(x, size) {
  return PAD + ((x - LO) / (HI - LO)) * (size - 2 * PAD);
}

function fromPx(px, size) {
  return LO + ((px - PAD) / (size - 2 * PAD)) * (HI - LO);
}

function drawScatter() {
  const c = $("scatter"), g = c.getContext("2d"), w = c.width, h = c.height;
  g.clearRect(0, 0, w, h);
  g.fillStyle = "rgba(40,40,40,0.25)";
  for (const [a, v] of summary.scatter) {
    g.fillRect(toPx(a, w) - 1, h - toPx(v, h) - 1, 2, 2);
  }
  const lines = (bounds, color, dash) => {
    g.strokeStyle = color;
    g.setLineDash(dash);
    g.beginPath();
    for (const t of bounds[0]) { g.moveTo(toPx(t, w), PAD); g.lineTo(toPx(t, w), h - PAD); }
    for (const t of bounds[2]) { g.moveTo(PAD, h - toPx(t, h)); g.lineTo(w - PAD, h - toPx(t, h)); }
    g.stroke();
  };
  lines(summary.linear.boundaries, "rgba(44,62,128,0.6)", [4, 4]);
  lines(summary.nonlinear.boundaries, "rgba(192,57,43,0.8)", []);
  g.setLineDash([]);
  g.strokeStyle = "#999";
  g.strokeRect(PAD, PAD, w - 2 * PAD, h - 2 * PAD);
  g.fillStyle = "#555";
  for (let x = LO; x <= HI; x++) {
    g.fillText(String(x), toPx(x, w) - 3, h - PAD + 14);
    g.fillText(String(x), PAD - 14, h - toPx(x, h) + 4);
  }
}

function drawStats() {
  const pct = (x) => (100 * x).toFixed(2) + "%";
  const rows = [
    ["coverage", pct(summary.nonlinear.coverage_rate), pct(summary.linear.coverage_rate)],
    ["occupied units", summary.nonlinear.occupied_units, summary.linear.occupied_units],
    ["of", summary.total_units, summary.total_units],
    ["occupancy entropy (nats)", summary.nonlinear.entropy.toFixed(3), summary.linear.entropy.toFixed(3)],
  ];
  $("stats").querySelector("tbody").innerHTML =
    rows.map((r) => `<tr>${r.map((x) => `<td>${x}</td>`).join("")}</tr>`).join("");
}

function drawGrid(canvasId, kind, level) {
  const counts = JSON.parse(demo.slice(kind, level));
  const c = $(canvasId), g = c.getContext("2d"), m = counts.length, cell = c.width / m;
  const max = Math.max(1, ...counts.flat());
  g.clearRect(0, 0, c.width, c.height);
  counts.forEach((row, a) => row.forEach((n, d) => {
    // Log scale so sparse units stay visible next to the crowded center.
    const shade = n === 0 ? 1 : 0.85 - 0.8 * Math.log1p(n) / Math.log1p(max);
    g.fillStyle = n === 0 ? "#f4f4f4" : `hsl(${kind === "linear" ? 225 : 8}, 60%, ${100 * shade}%)`;
    g.fillRect(d * cell, (m - 1 - a) * cell, cell - 1, cell - 1);
  }));
}

function drawGrids() {
  const level = Number($("vslice").value);
  $("vlabel").textContent = `x_v = ${level}`;
  drawGrid("grid-nl", "nonlinear", level);
  drawGrid("grid-lin", "linear", level);
}

function fit() {
  $("status").textContent = "fitting...";
  // Let the status paint before the synchronous fit.
  setTimeout(() => {
    try {
      const t0 = performance.now();
      demo?.free();
      demo = new Demo(Number($("n").value), Number($("bins").value), Number($("spread").value), Number($("seed").value));
      summary = JSON.parse(demo.summary());
      $("vslice").max = summary.bins;
      $("vslice").value = Math.min(Number($("vslice").value), summary.bins);
      drawScatter();
      drawStats();
      drawGrids();
      $("status").textContent = `fitted in ${(performance.now() - t0).toFixed(0)} ms`;
    } catch (e) {
      $("status").textContent = String(e);
    }
  }, 10);
}

$("scatter").addEventListener("click", (ev) => {
  if (!demo) return;
  const c = $("scatter"), r = c.getBoundingClientRect();
  const a = fromPx(ev.clientX - r.left, c.width), v = fromPx(c.height - (ev.clientY - r.top), c.height);
  const d = Number($("dom").value);
  const t = JSON.parse(demo.tokenize(a, d, v));
  const fmt = (xs) => xs.map((x) => x.toFixed(2)).join(", ");
  $("point").textContent =
    `point        (${fmt([a, d, v])})\n` +
    `nonlinear    tokens (${t.nonlinear.join(", ")})  center (${fmt(t.nonlinear_center)})\n` +
    `equal-width  tokens (${t.linear.join(", ")})  center (${fmt(t.linear_center)})`;
});

$("fit").addEventListener("click", fit);
$("vslice").addEventListener("input", () => demo && drawGrids());

await init();
fit();
