import init, { mapGrid, sweepFunctional, concentration } from "../pkg/conformal_det_web.js";

const $ = (id) => document.getElementById(id);
const TOL = 1e-10;

function fail(err) {
  $("status").textContent = String(err);
}

function drawGrid() {
  const n = Number($("grid-n").value);
  $("grid-n-out").textContent = n;
  const variant = $("grid-variant").value;
  let pts;
  try {
    pts = mapGrid(variant, n, 8, 16, 241);
  } catch (e) {
    return fail(e);
  }
  const canvas = $("grid");
  const ctx = canvas.getContext("2d");
  const half = canvas.width / 2;
  // Raw images live in [-2, 0] x [-1, 1]; the others in the unit disk.
  const cx = variant === "normalized" ? 0 : -1;
  const scale = half / (variant === "normalized" ? 1.1 : 1.15);
  const px = (x) => half + (x - cx) * scale;
  const py = (y) => half - y * scale;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.strokeStyle = "#bbb";
  ctx.beginPath();
  ctx.moveTo(0, py(0));
  ctx.lineTo(canvas.width, py(0));
  ctx.moveTo(px(0), 0);
  ctx.lineTo(px(0), canvas.height);
  ctx.stroke();
  ctx.strokeStyle = "#1a5fb4";
  ctx.lineWidth = 1;
  ctx.beginPath();
  let pen = false;
  for (let i = 0; i < pts.length; i += 2) {
    if (Number.isNaN(pts[i])) {
      pen = false;
      continue;
    }
    if (pen) ctx.lineTo(px(pts[i]), py(pts[i + 1]));
    else ctx.moveTo(px(pts[i]), py(pts[i + 1]));
    pen = true;
  }
  ctx.stroke();
}

function runSweep() {
  const nList = $("sweep-n").value.split(",").map((s) => Number(s.trim()));
  let view;
  try {
    view = JSON.parse(
      sweepFunctional($("sweep-variant").value, Number($("sweep-dim").value), Uint32Array.from(nList), $("sweep-functional").value, TOL),
    );
  } catch (e) {
    return fail(e);
  }
  $("status").textContent = "";
  const rows = view.n.map(
    (n, i) => `<tr><td>${n}</td><td>${view.values[i].toPrecision(12)}</td><td>${view.errors[i].toExponential(2)}</td><td>${view.converged[i] ? "yes" : "no"}</td></tr>`,
  );
  $("sweep-table").innerHTML = "<tr><th>n</th><th>value</th><th>error</th><th>converged</th></tr>" + rows.join("");
  $("sweep-limit").textContent = view.limit === null ? "no fit" : `extrapolated limit ${view.limit.toPrecision(8)} (model ${view.model})`;
}

function drawConcentration() {
  const n = Number($("conc-n").value);
  $("conc-n-out").textContent = n;
  const radii = Array.from({ length: 40 }, (_, k) => 0.05 * (k + 1));
  let fr;
  try {
    fr = concentration(n, Float64Array.from(radii), 1e-8);
  } catch (e) {
    return fail(e);
  }
  const canvas = $("conc");
  const ctx = canvas.getContext("2d");
  const w = canvas.width;
  const h = canvas.height;
  const pad = 28;
  ctx.clearRect(0, 0, w, h);
  ctx.fillStyle = "#444";
  ctx.fillText("ρ = 2", w - pad - 10, h - 8);
  ctx.fillText("1", 6, pad);
  ctx.strokeStyle = "#bbb";
  ctx.strokeRect(pad, pad - 10, w - 2 * pad, h - 2 * pad);
  const bw = (w - 2 * pad) / radii.length;
  ctx.fillStyle = "#c64600";
  fr.forEach((f, k) => {
    const bh = f * (h - 2 * pad);
    ctx.fillRect(pad + k * bw + 1, h - pad - 10 - bh, bw - 2, bh);
  });
}

init()
  .then(() => {
    $("grid-n").addEventListener("input", drawGrid);
    $("grid-variant").addEventListener("change", drawGrid);
    $("sweep-run").addEventListener("click", runSweep);
    $("conc-n").addEventListener("input", drawConcentration);
    drawGrid();
    drawConcentration();
  })
  .catch(fail);
