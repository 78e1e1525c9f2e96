import init, { render, optimize, example, exampleNames } from "./pkg/muskia_web.js";

const SIZE = 256;
const $ = (id) => document.getElementById(id);

function paint(canvas, rgba) {
  const ctx = canvas.getContext("2d");
  ctx.putImageData(new ImageData(new Uint8ClampedArray(rgba), SIZE, SIZE), 0, 0);
}

function clear(canvas) {
  canvas.getContext("2d").clearRect(0, 0, SIZE, SIZE);
}

// Differing pixels in red over a faded copy of the input.
function paintDiff(canvas, a, b) {
  const out = new Uint8ClampedArray(a.length);
  for (let i = 0; i < a.length; i += 4) {
    const same = a[i] === b[i] && a[i + 1] === b[i + 1] && a[i + 2] === b[i + 2] && a[i + 3] === b[i + 3];
    if (same) {
      out[i] = out[i + 1] = out[i + 2] = 255 - (255 - (a[i] + a[i + 1] + a[i + 2]) / 3) / 4;
      out[i + 3] = 255;
    } else {
      out.set([220, 0, 0, 255], i);
    }
  }
  paint(canvas, out);
}

function status(text, error = false) {
  $("status").textContent = text;
  $("status").className = error ? "error" : "";
}

function guarded(f) {
  return () => {
    try {
      f();
    } catch (e) {
      status(String(e.message ?? e), true);
    }
  };
}

const loadExample = guarded(() => {
  $("doc").value = example($("example").value, BigInt($("seed").value || 0));
  doRender();
});

const doRender = guarded(() => {
  const t0 = performance.now();
  paint($("before"), render($("doc").value, SIZE, SIZE));
  clear($("after"));
  clear($("diff"));
  $("optimized").textContent = "";
  status(`rendered in ${(performance.now() - t0).toFixed(1)} ms`);
});

const doOptimize = guarded(() => {
  const r = optimize($("doc").value, SIZE, SIZE);
  const before = r.before;
  const after = r.after;
  paint($("before"), before);
  paint($("after"), after);
  paintDiff($("diff"), before, after);
  $("optimized").textContent = r.optimized;
  status(r.report);
  r.free();
});

await init();
for (const name of exampleNames()) {
  $("example").add(new Option(name, name));
}
$("load").onclick = loadExample;
$("render").onclick = doRender;
$("optimize").onclick = doOptimize;
loadExample();
