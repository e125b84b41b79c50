import { t, type Messages } from "./i18n.js";
import { LOCALES, MAX_PATHS_MAX, MAX_PATHS_MIN, type ConsoleState } from "./state.js";
import type { EntitySummary, RedundancyDoc, SimilarityDoc, SnapshotDoc } from "./types.js";

export const DIMENSIONS = [
  { key: "connection", field: "dim_connection" },
  { key: "coherence", field: "dim_coherence" },
  { key: "depth_variance", field: "dim_depth_variance" },
  { key: "alignment", field: "dim_alignment" },
] as const;

export function fmt3(x: number): string {
  return x.toFixed(3);
}

export function escapeHtml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

const LOW: [number, number, number] = [178, 24, 43];
const MID: [number, number, number] = [247, 247, 247];
const HIGH: [number, number, number] = [33, 102, 172];

/** Diverging scale: cosine 0 is neutral, 1 is the full high color, -1 the low one. */
export function similarityColor(v: number): string {
  const x = Math.max(-1, Math.min(1, v));
  const end = x >= 0 ? HIGH : LOW;
  const f = Math.abs(x);
  const mix = MID.map((m, i) => Math.round(m + (end[i]! - m) * f));
  return `rgb(${mix[0]}, ${mix[1]}, ${mix[2]})`;
}

export interface HeatCell {
  row: number;
  col: number;
  value: number;
  color: string;
  title: string;
}

export interface HeatmapModel {
  size: number;
  labels: string[];
  cells: HeatCell[];
}

export function heatmapView(sim: Pick<SimilarityDoc, "labels" | "matrix">): HeatmapModel {
  const size = sim.matrix.length;
  const cells: HeatCell[] = [];
  sim.matrix.forEach((row, i) =>
    row.forEach((value, j) =>
      cells.push({
        row: i,
        col: j,
        value,
        color: similarityColor(value),
        title: `${sim.labels[i]} / ${sim.labels[j]}: ${fmt3(value)}`,
      }),
    ),
  );
  return { size, labels: sim.labels, cells };
}

export function renderHeatmap(sim: SimilarityDoc | undefined, m: Messages): string {
  const model = sim ? heatmapView(sim) : undefined;
  if (!model || model.size === 0) {
    return `<p class="placeholder" data-role="heatmap-empty">${escapeHtml(t(m, "viz.no_similarity"))}</p>`;
  }
  const head = model.labels.map((l) => `<th>${escapeHtml(l)}</th>`).join("");
  const rows = model.labels
    .map((label, i) => {
      const cells = model.cells
        .filter((c) => c.row === i)
        .map(
          (c) =>
            `<td class="cell" style="background:${c.color}" title="${escapeHtml(c.title)}" data-value="${fmt3(c.value)}">${fmt3(c.value)}</td>`,
        )
        .join("");
      return `<tr><th>${escapeHtml(label)}</th>${cells}</tr>`;
    })
    .join("");
  return `<table class="heatmap" data-size="${model.size}"><tr><th></th>${head}</tr>${rows}</table>`;
}

export function renderAlert(error: ConsoleState["error"], m: Messages): string {
  if (!error) return `<div class="alert" role="alert" hidden></div>`;
  return (
    `<div class="alert" role="alert" data-code="${escapeHtml(error.code)}">` +
    `<strong>${escapeHtml(t(m, "error.title"))}</strong> ` +
    `<code>${error.status} ${escapeHtml(error.code)}</code> ${escapeHtml(error.message)}</div>`
  );
}

function renderControls(state: ConsoleState, m: Messages, snapshot?: SnapshotDoc): string {
  const langs = LOCALES.map(
    (l) => `<option value="${l}"${l === state.locale ? " selected" : ""}>${l}</option>`,
  ).join("");
  const snap = snapshot
    ? `<option value="${escapeHtml(snapshot.data_dir)}" selected>${escapeHtml(snapshot.data_dir)}</option>`
    : "";
  return `<aside class="panel" data-panel="controls">
<h2>${escapeHtml(t(m, "panel.controls"))}</h2>
<label>${escapeHtml(t(m, "control.language"))}<select name="locale">${langs}</select></label>
<label>${escapeHtml(t(m, "control.snapshot"))}<select name="snapshot">${snap}</select></label>
<label>${escapeHtml(t(m, "control.qid"))}<input name="qid" value="${escapeHtml(state.qid)}"></label>
<label>${escapeHtml(t(m, "control.max_paths"))}<input name="max_paths" type="number" min="${MAX_PATHS_MIN}" max="${MAX_PATHS_MAX}" value="${state.maxPaths}"></label>
<button name="inspect">${escapeHtml(t(m, "control.inspect"))}</button>
</aside>`;
}

function renderSummary(e: EntitySummary | undefined, m: Messages): string {
  const title = `<h2>${escapeHtml(t(m, "panel.summary"))}</h2>`;
  if (!e) return `<main class="panel" data-panel="summary">${title}</main>`;
  const name = e.label ?? e.qid;
  const desc = e.description ?? t(m, "summary.no_description");
  const risk = e.risk;

  const narrative = e.narrative
    .map(
      (n) =>
        `<li class="${n.severity}" data-dimension="${n.dimension}"><span>${escapeHtml(t(m, `severity.${n.severity}`))}</span> ${escapeHtml(t(m, n.key, n.params))}</li>`,
    )
    .join("");
  const bars = risk
    ? DIMENSIONS.map(({ key, field }) => {
        const score = risk[field];
        const weight = risk.weights[key];
        return `<div class="bar" data-dimension="${key}"><span class="name">${escapeHtml(t(m, `dimension.${key}`))}</span><span class="track"><span class="fill" style="width:${(score * 100).toFixed(1)}%"></span></span><span class="value">${fmt3(score)} × ${fmt3(weight)}</span></div>`;
      }).join("")
    : "";
  const flags = e.flags
    .map((f) => `<li data-tag="${escapeHtml(f.tag)}">${escapeHtml(t(m, `tag.${f.tag}`))} <code>${escapeHtml(f.detail)}</code></li>`)
    .join("");

  return `<main class="panel" data-panel="summary">${title}
<h3 class="entity-name">${escapeHtml(name)} <small>${escapeHtml(e.qid)}</small></h3>
<p class="description">${escapeHtml(desc)}</p>
<p class="overall"><span>${escapeHtml(t(m, "summary.overall_risk"))}</span> <strong data-role="aggregate">${risk ? fmt3(risk.aggregate) : "-"}</strong></p>
<h4>${escapeHtml(t(m, "summary.strengths_issues"))}</h4><ul class="narrative">${narrative}</ul>
<h4>${escapeHtml(t(m, "summary.breakdown"))}</h4><div class="bars">${bars}</div>
<h4>${escapeHtml(t(m, "flags.title"))}</h4><ul class="flags">${flags}</ul>
</main>`;
}

function renderRedundancy(r: RedundancyDoc | undefined, m: Messages): string {
  if (!r || r.redundant.length === 0) return `<p class="placeholder">${escapeHtml(t(m, "viz.no_redundancy"))}</p>`;
  const items = r.redundant
    .map((x) => {
      const paths = x.witnesses.map((w) => `<li>${w.map(escapeHtml).join(" → ")}</li>`).join("");
      return `<li><code>${escapeHtml(x.child)} → ${escapeHtml(x.parent)}</code><ol>${paths}</ol></li>`;
    })
    .join("");
  return `<ul class="redundancy">${items}</ul>`;
}

function renderVisualization(state: ConsoleState, m: Messages): string {
  const e = state.entity;
  const metrics = e?.risk
    ? DIMENSIONS.map(
        ({ key, field }) => `<tr><th>${escapeHtml(t(m, `dimension.${key}`))}</th><td>${fmt3(e.risk![field])}</td></tr>`,
      ).join("") + `<tr><th>P31 / P279</th><td>${e.risk.p31_count} / ${e.risk.p279_count}</td></tr>`
    : "";
  const drift = e?.drift
    ? `<h4>${escapeHtml(t(m, "drift.title"))}</h4><p data-role="drift">${fmt3(e.drift.drift_adj)}${
        e.drift.flagged ? ` <em>${escapeHtml(t(m, "drift.flagged"))}</em>` : ""
      }</p>`
    : "";
  return `<aside class="panel" data-panel="visualization">
<h2>${escapeHtml(t(m, "panel.visualization"))}</h2>
<h4>${escapeHtml(t(m, "viz.metrics"))}</h4><table class="metrics">${metrics}</table>
${drift}
<h4>${escapeHtml(t(m, "viz.redundancy"))}</h4>${renderRedundancy(state.redundancy, m)}
<h4>${escapeHtml(t(m, "viz.similarity"))}</h4>${renderHeatmap(state.similarity, m)}
</aside>`;
}

/** The full three-panel page for the current state. */
export function renderEntityView(state: ConsoleState, m: Messages, snapshot?: SnapshotDoc): string {
  return `<h1>${escapeHtml(t(m, "app.title"))}</h1>
${renderAlert(state.error, m)}
<div class="layout">
${renderControls(state, m, snapshot)}
${renderSummary(state.entity, m)}
${renderVisualization(state, m)}
</div>`;
}
