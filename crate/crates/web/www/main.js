import init, { reduce, evolve, landscape } from "./pkg/qaoa_reduce_web.js";

const $ = (id) => document.getElementById(id);

function instance() {
  return [$("family").value, Number($("n").value), Number($("k").value), Number($("seed").value)];
}

function guarded(f) {
  return () => {
    $("error").textContent = "";
    try {
      f();
    } catch (e) {
      $("error").textContent = String(e.message ?? e);
    }
  };
}

const angles = (s) => s.split(",").map((x) => Number(x.trim()));

function drawLandscape() {
  const steps = Number($("steps").value);
  const values = landscape(...instance(), steps);
  const lo = Math.min(...values);
  const hi = Math.max(...values);
  const canvas = $("canvas");
  const ctx = canvas.getContext("2d");
  const cell = canvas.width / steps;
  for (let i = 0; i < steps; i++) {
    for (let j = 0; j < steps; j++) {
      const t = hi > lo ? (values[i * steps + j] - lo) / (hi - lo) : 0.5;
      const c = Math.round(255 * t);
      ctx.fillStyle = `rgb(${c}, ${c}, 255)`;
      ctx.fillRect(j * cell, i * cell, cell + 1, cell + 1);
    }
  }
  $("range").textContent = `energy from ${lo.toFixed(4)} to ${hi.toFixed(4)}`;
}

await init();
$("reduce").onclick = guarded(() => {
  $("reduce-out").textContent = JSON.stringify(JSON.parse(reduce(...instance())), null, 2);
});
$("evolve").onclick = guarded(() => {
  const out = evolve(...instance(), angles($("gammas").value), angles($("betas").value));
  $("evolve-out").textContent = JSON.stringify(JSON.parse(out), null, 2);
});
$("landscape").onclick = guarded(drawLandscape);
