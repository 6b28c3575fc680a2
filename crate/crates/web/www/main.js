import init, { tracePoints, spectral, survival, survivalTimes } from "./pkg/sle_web.js";

const num = (sec, name) => Number(sec.querySelector(`[name=${name}]`).value);

function show(sec, text, isError = false) {
  const out = sec.querySelector(".out");
  out.textContent = text;
  out.className = isError ? "out err" : "out";
}

// Maps data coordinates into the canvas with a margin; y points up.
function frame(canvas, x0, x1, y0, y1, keepAspect) {
  const m = 20;
  const w = canvas.width - 2 * m;
  const h = canvas.height - 2 * m;
  let sx = w / (x1 - x0 || 1);
  let sy = h / (y1 - y0 || 1);
  if (keepAspect) sx = sy = Math.min(sx, sy);
  return (x, y) => [m + (x - x0) * sx, canvas.height - m - (y - y0) * sy];
}

function polyline(ctx, pts, color) {
  ctx.strokeStyle = color;
  ctx.beginPath();
  pts.forEach(([x, y], i) => (i ? ctx.lineTo(x, y) : ctx.moveTo(x, y)));
  ctx.stroke();
}

function run(sec, fn) {
  sec.querySelector("button").addEventListener("click", () => {
    show(sec, "running...");
    // let the status paint before the synchronous wasm call
    setTimeout(() => {
      const t0 = performance.now();
      try {
        const msg = fn();
        show(sec, `${msg}  (${((performance.now() - t0) / 1000).toFixed(2)} s)`);
      } catch (e) {
        show(sec, String(e.message ?? e), true);
      }
    }, 10);
  });
}

function drawTrace() {
  const sec = document.getElementById("trace");
  const xy = tracePoints(num(sec, "kappa"), num(sec, "horizon"), num(sec, "steps"), num(sec, "seed"));
  const pts = [];
  for (let i = 0; i < xy.length; i += 2) pts.push([xy[i], xy[i + 1]]);
  const xs = pts.map((p) => p[0]);
  const ys = pts.map((p) => p[1]);
  const canvas = sec.querySelector("canvas");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const f = frame(canvas, Math.min(...xs), Math.max(...xs), 0, Math.max(...ys), true);
  polyline(ctx, [f(Math.min(...xs), 0), f(Math.max(...xs), 0)], "#bbb");
  polyline(ctx, pts.map(([x, y]) => f(x, y)), "#000");
  return `${pts.length} points, tip at ${pts.at(-1)[0].toFixed(3)} + ${pts.at(-1)[1].toFixed(3)}i`;
}

function drawSpectral() {
  const sec = document.getElementById("spectral");
  const kappa = num(sec, "kappa");
  const out = spectral(kappa, num(sec, "grid"));
  const lambda = out[0];
  const v = out.slice(1);
  const h = (2 * Math.PI) / (v.length + 1);
  const canvas = sec.querySelector("canvas");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const f = frame(canvas, 0, 2 * Math.PI, 0, 1, false);
  const exact = Array.from(v, (_, i) => Math.pow(Math.sin(((i + 1) * h) / 2), 8 / kappa - 1));
  polyline(ctx, exact.map((y, i) => f((i + 1) * h, y)), "#e33");
  polyline(ctx, Array.from(v, (y, i) => f((i + 1) * h, y)), "#000");
  return `λ̂ = ${lambda.toFixed(6)}, 1 − κ/8 = ${(1 - kappa / 8).toFixed(6)} (black: computed, red: sin(x/2)^(8/κ−1))`;
}

function drawSurvival() {
  const sec = document.getElementById("survival");
  const out = survival(num(sec, "kappa"), num(sec, "paths"), num(sec, "ds"), num(sec, "seed"));
  const [rate, reference] = out;
  const probs = out.slice(2);
  const s = survivalTimes();
  const canvas = sec.querySelector("canvas");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const logs = probs.map((p) => (p > 0 ? Math.log(p) : NaN)).filter(Number.isFinite);
  const lo = Math.min(...logs, -reference * s.at(-1));
  const f = frame(canvas, 0, s.at(-1), lo, 0, false);
  polyline(ctx, [f(0, 0), f(s.at(-1), -reference * s.at(-1))], "#e33");
  ctx.fillStyle = "#000";
  probs.forEach((p, i) => {
    if (p > 0) {
      const [x, y] = f(s[i], Math.log(p));
      ctx.fillRect(x - 2, y - 2, 4, 4);
    }
  });
  return `fitted rate ${rate.toFixed(4)}, 1 − κ/8 = ${reference.toFixed(4)} (log scale; red: slope −(1 − κ/8))`;
}

await init();
run(document.getElementById("trace"), drawTrace);
run(document.getElementById("spectral"), drawSpectral);
run(document.getElementById("survival"), drawSurvival);
