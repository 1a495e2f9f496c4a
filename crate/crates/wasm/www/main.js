import init, { presets, score, fit, mask } from "./pkg/glyphstroke_wasm.js";

const $ = (id) => document.getElementById(id);

const starters = {
  plus: "(0.18, 0.5) -> (0.82, 0.5)\n(0.5, 0.18) -> (0.5, 0.82)",
  bar: "(0.15, 0.5) -> (0.85, 0.5)",
  triangle: "(0.5, 0.15) -> (0.85, 0.8)\n(0.85, 0.8) -> (0.15, 0.8)\n(0.15, 0.8) -> (0.5, 0.15)",
  ring: "(0.82, 0.5) -> (0.5, 0.82)\n(0.5, 0.82) -> (0.18, 0.5)",
  zigzag: "(0.15, 0.2) -> (0.85, 0.2)\n(0.85, 0.2) -> (0.15, 0.8)\n(0.15, 0.8) -> (0.85, 0.8)",
  tree: "(0.5, 0.12) -> (0.5, 0.88)\n(0.5, 0.35) -> (0.2, 0.15)",
};

function show(svg, lines) {
  $("view").innerHTML = svg;
  $("stats").textContent = lines.join("\n");
  $("stats").classList.remove("error");
}

function fail(err) {
  $("stats").textContent = String(err);
  $("stats").classList.add("error");
}

const fmt = (x) => Number(x).toFixed(4);

function runScore() {
  try {
    const v = JSON.parse(score($("preset").value, $("strokes").value));
    show(v.svg, [
      `format ok   ${v.format_ok}`,
      `strokes     ${v.strokes} (${v.n_invalid} invalid)`,
      `coverage    ${fmt(v.coverage * 100)}%`,
      `r_s         ${fmt(v.r_s)}`,
      `r           ${fmt(v.r)}`,
    ]);
  } catch (e) {
    fail(e);
  }
}

function runFit() {
  try {
    const v = JSON.parse(fit($("preset").value, Number($("seed").value), Number($("max").value)));
    $("strokes").value = v.text;
    show(v.svg, [`coverage    ${fmt(v.coverage * 100)}%`, `r_s         ${fmt(v.r_s)}`]);
  } catch (e) {
    fail(e);
  }
}

function runMask() {
  try {
    const v = JSON.parse(mask($("preset").value, $("strokes").value, Number($("seed").value), Number($("trial").value)));
    show(v.svg, [
      `center      stroke ${v.center_index}`,
      ...v.probabilities.map((p, k) => `stroke ${k}    p=${fmt(p)}  ${v.outcomes[k] ? "masked" : "kept"}`),
    ]);
  } catch (e) {
    fail(e);
  }
}

function loadPreset() {
  const body = starters[$("preset").value] ?? "";
  $("strokes").value = `<strokes>\n${body}\n</strokes>`;
  runScore();
}

await init();
for (const name of JSON.parse(presets())) {
  $("preset").add(new Option(name, name));
}
$("preset").addEventListener("change", loadPreset);
$("score").addEventListener("click", runScore);
$("fit").addEventListener("click", runFit);
$("mask").addEventListener("click", runMask);
loadPreset();
