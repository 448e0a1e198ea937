import init, { scaling_curve, innovation_tails, stable_vs_ecdf } from "./pkg/lplab_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function plot(canvas, xs, series, logx) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height, pad = 30;
  ctx.clearRect(0, 0, w, h);
  const tx = xs.map((x) => (logx ? Math.log2(x) : x));
  const all = series.flatMap((s) => s.y);
  const [x0, x1] = [Math.min(...tx), Math.max(...tx)];
  const [y0, y1] = [Math.min(...all), Math.max(...all)];
  const px = (x) => pad + ((x - x0) / (x1 - x0 || 1)) * (w - 2 * pad);
  const py = (y) => h - pad - ((y - y0) / (y1 - y0 || 1)) * (h - 2 * pad);
  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.beginPath();
    s.y.forEach((y, i) => (i ? ctx.lineTo(px(tx[i]), py(y)) : ctx.moveTo(px(tx[i]), py(y))));
    ctx.stroke();
  }
}

function guard(out, f) {
  try {
    f();
  } catch (e) {
    $(out).textContent = "error: " + e;
  }
}

await init();

$("sc-run").onclick = () => guard("sc-out", () => {
  const alpha = num("sc-alpha");
  const process = {
    beta: num("sc-beta"),
    innovations: { alpha, sigma1: 0.5, sigma2: 0.5, centering: alpha > 1 && alpha < 2 ? "mean_zero" : "symmetric" },
  };
  const r = JSON.parse(scaling_curve(JSON.stringify(process), JSON.stringify({ kind: $("sc-kernel").value }), 8, 24));
  $("sc-out").textContent = "region: " + JSON.stringify(r.region) + "\n" +
    r.points.map((p) => `N=${p.n}  A_N=${p.a_n.toPrecision(6)}  A_N/sqrt(N)=${p.a_n_over_sqrt_n.toPrecision(4)}`).join("\n");
  if (r.points.length) {
    plot($("sc-plot"), r.points.map((p) => p.n), [{ y: r.points.map((p) => Math.log(p.a_n)), color: "#c33" }], true);
  }
});

$("tl-run").onclick = () => guard("tl-out", () => {
  const alpha = num("tl-alpha");
  const spec = { alpha, sigma1: num("tl-s1"), sigma2: num("tl-s2"), centering: alpha > 1 ? "mean_zero" : "symmetric" };
  const r = JSON.parse(innovation_tails(JSON.stringify(spec), num("tl-n"), BigInt(1)));
  $("tl-out").textContent = `status: ${r.status}\n` +
    r.rows.map((t) => `x=${t.x}  right ${t.right_ratio.toFixed(3)} (${t.right_exceedances})  left ${t.left_ratio.toFixed(3)} (${t.left_exceedances})`).join("\n");
});

$("st-run").onclick = () => guard("st-out", () => {
  const r = JSON.parse(stable_vs_ecdf(num("st-alpha"), num("st-sigma"), num("st-d"), num("st-n"), BigInt(1)));
  $("st-out").textContent = `KS = ${r.ks.toFixed(4)}  skew = ${r.skew.toFixed(3)}  scale = ${r.scale.toFixed(3)}`;
  plot($("st-plot"), r.x, [{ y: r.cdf, color: "#c33" }, { y: r.ecdf, color: "#36c" }], false);
});
