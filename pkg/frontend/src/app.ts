/** Browser entry point: wires the API client, view state, and display models
 * into the DOM. All science happens server-side; this file only fetches,
 * formats, and draws.
 */

import { Api, ApiError } from "./api.js";
import type { CitySummary, ForecastReport, InterventionResult } from "./api.js";
import { barChartSvg, lineChartSvg } from "./charts.js";
import {
  addVertex,
  canSubmit,
  canvasToPixel,
  canvasToWorld,
  clearPolygon,
  decodeState,
  encodeState,
  initialState,
  removeLastVertex,
  setLayer,
  setMode,
  setScenario,
  setScene,
  setVariant,
  worldToCanvas,
  type Mode,
  type ViewState,
} from "./state.js";
import {
  cityOverview,
  errorGuidance,
  interventionPanel,
  layerPanel,
  pixelReadout,
  profileSeries,
  scenarioPanel,
  scenarioTrend,
  toInterventionRequest,
  transectSeries,
  type Row,
} from "./views.js";

const api = new Api("");
let state: ViewState = decodeState(window.location.hash) ?? initialState;
let city: CitySummary | null = null;
const CANVAS_SIZE = 520;

function $(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el;
}

function h<K extends keyof HTMLElementTagNameMap>(
  tag: K, attrs: Record<string, string> = {}, text?: string,
): HTMLElementTagNameMap[K] {
  const el = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) el.setAttribute(k, v);
  if (text !== undefined) el.textContent = text;
  return el;
}

function fmt(value: number | string | null): string {
  if (value === null) return "no data";
  if (typeof value === "string") return value;
  if (Number.isInteger(value)) return String(value);
  return value.toFixed(3);
}

function renderRows(target: HTMLElement, rows: Row[]): void {
  target.textContent = "";
  for (const row of rows) {
    const div = h("div", { class: "row" });
    div.append(h("span", { class: "row-label" }, row.label));
    div.append(h("span", { class: "row-value" }, `${fmt(row.value)}${row.unit ? " " + row.unit : ""}`));
    target.append(div);
  }
}

function toast(err: unknown): void {
  const box = $("toast");
  if (err instanceof ApiError) {
    box.textContent = `${err.code}: ${errorGuidance(err)}`;
  } else {
    box.textContent = String(err);
  }
  box.classList.add("visible");
  setTimeout(() => box.classList.remove("visible"), 6000);
}

function syncHash(): void {
  history.replaceState(null, "", `#${encodeState(state)}`);
}

function update(next: ViewState): void {
  state = next;
  syncHash();
}

// --- layer viewer ------------------------------------------------------------

async function showLayer(): Promise<void> {
  if (!state.city) return;
  try {
    const doc = await api.layerStats(state.city, state.layer, state.scene, state.variant);
    const model = layerPanel(doc);
    ($("layer-img") as HTMLImageElement).src = model.pngUrl;
    $("layer-title").textContent = model.title;
    renderRows($("layer-stats"), model.rows);
  } catch (err) {
    toast(err);
  }
}

async function probePixel(row: number, col: number): Promise<void> {
  if (!state.city) return;
  try {
    const v = await api.layerValue(state.city, state.layer, row, col, state.scene, state.variant);
    renderRows($("readout"), pixelReadout(v));
  } catch (err) {
    toast(err);
  }
}

// --- polygon canvas ----------------------------------------------------------

function drawPolygon(): void {
  const canvas = $("draw") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d");
  if (!ctx || !city) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (state.mode !== "intervene" || !state.polygon.length) return;
  const pts = state.polygon.map((v) => worldToCanvas(city!.grid, canvas.width, canvas.height, v));
  ctx.strokeStyle = "#facc15";
  ctx.fillStyle = "rgba(250, 204, 21, 0.25)";
  ctx.lineWidth = 2;
  ctx.beginPath();
  pts.forEach((p, i) => (i ? ctx.lineTo(p.cx, p.cy) : ctx.moveTo(p.cx, p.cy)));
  if (pts.length > 2) ctx.closePath();
  ctx.stroke();
  if (pts.length > 2) ctx.fill();
  for (const p of pts) {
    ctx.beginPath();
    ctx.arc(p.cx, p.cy, 4, 0, Math.PI * 2);
    ctx.fillStyle = "#facc15";
    ctx.fill();
  }
  ($("submit") as HTMLButtonElement).disabled = !canSubmit(state);
  $("vertex-count").textContent = `${state.polygon.length} vertices`;
}

function onCanvasClick(ev: MouseEvent): void {
  const canvas = $("draw") as HTMLCanvasElement;
  const rect = canvas.getBoundingClientRect();
  const cx = ((ev.clientX - rect.left) / rect.width) * canvas.width;
  const cy = ((ev.clientY - rect.top) / rect.height) * canvas.height;
  if (!city) return;
  if (state.mode === "intervene") {
    update(addVertex(state, canvasToWorld(city.grid, canvas.width, canvas.height, cx, cy)));
    drawPolygon();
  } else {
    const { row, col } = canvasToPixel(city.grid, canvas.width, canvas.height, cx, cy);
    void probePixel(row, col);
  }
}

// --- intervention results ----------------------------------------------------

function renderIntervention(res: InterventionResult): void {
  const model = interventionPanel(res);
  const badge = $("delta-badge");
  badge.textContent = `${fmt(model.badge)} C`;
  badge.className = `badge ${model.badge < 0 ? "badge-cool" : "badge-warm"}`;
  renderRows($("intervention-rows"), model.rows);

  const maps = $("result-maps");
  maps.textContent = "";
  for (const which of ["before", "after", "delta"]) {
    const url = model.layerUrls[which];
    if (!url) continue;
    const fig = h("figure");
    const img = h("img", { src: url, alt: which, class: "result-map" });
    fig.append(img, h("figcaption", {}, which));
    maps.append(fig);
  }

  $("transect-chart").innerHTML = lineChartSvg(transectSeries(res), { xLabel: "distance m" });
  $("profile-chart").innerHTML = lineChartSvg(
    [profileSeries(res.internal_profile), profileSeries(res.spillover_profile)],
    { xLabel: "distance to park edge m" },
  );
}

async function submitIntervention(): Promise<void> {
  if (!state.city || !canSubmit(state)) return;
  const button = $("submit") as HTMLButtonElement;
  button.disabled = true;
  try {
    const res = await api.submitIntervention(state.city, toInterventionRequest(state));
    renderIntervention(res);
  } catch (err) {
    toast(err);
  } finally {
    button.disabled = !canSubmit(state);
  }
}

// --- scenario explorer -------------------------------------------------------

async function showScenario(rcp: string, year: number): Promise<void> {
  if (!state.city) return;
  update(setScenario(state, rcp, year));
  try {
    const report = await api.forecast(state.city, rcp, year, state.variant);
    const model = scenarioPanel(report);
    renderRows($("scenario-rows"), model.rows);
    ($("scenario-img") as HTMLImageElement).src = model.anomalyPngUrl;
    $("range-banner").classList.toggle("visible", model.warnOutOfRange);
  } catch (err) {
    toast(err);
  }
}

async function showTrend(): Promise<void> {
  if (!state.city || !city) return;
  try {
    const reports: ForecastReport[] = [];
    for (const sc of city.scenarios) {
      reports.push(await api.forecast(state.city, sc.rcp, sc.horizon_year, state.variant));
    }
    const trend = scenarioTrend(reports);
    $("trend-chart").innerHTML = barChartSvg(trend.labels, trend.values, { height: 180 });
  } catch (err) {
    toast(err);
  }
}

// --- shell -------------------------------------------------------------------

function fillSelect(el: HTMLSelectElement, options: string[], current: string | null): void {
  el.textContent = "";
  for (const opt of options) el.append(h("option", { value: opt }, opt));
  if (current && options.includes(current)) el.value = current;
}

function setTab(mode: Mode): void {
  update(setMode(state, mode));
  for (const m of ["browse", "intervene", "scenario"] as const) {
    $(`tab-${m}`).classList.toggle("active", m === mode);
    $(`pane-${m}`).classList.toggle("hidden", m !== mode);
  }
  drawPolygon();
}

async function loadCity(cityId: string): Promise<void> {
  city = await api.city(cityId);
  update({ ...state, city: cityId });
  renderRows($("city-rows"), cityOverview(city));
  fillSelect($("layer-select") as HTMLSelectElement, city.layers, state.layer);
  fillSelect($("scene-select") as HTMLSelectElement, city.filtered_scene_ids, state.scene);
  fillSelect($("variant-select") as HTMLSelectElement, city.variants, state.variant);

  const picker = $("scenario-picker");
  picker.textContent = "";
  for (const sc of city.scenarios) {
    const btn = h("button", { class: "scenario-btn" }, `RCP ${sc.rcp} ${sc.horizon_year}`);
    btn.addEventListener("click", () => void showScenario(sc.rcp, sc.horizon_year));
    picker.append(btn);
  }
  await showLayer();
}

async function boot(): Promise<void> {
  try {
    const version = await api.version();
    $("version").textContent = `${version.name} ${version.version} (${version.kernel_backend})`;
    const cities = await api.cities();
    const select = $("city-select") as HTMLSelectElement;
    fillSelect(select, cities.map((c) => c.city_id), state.city);
    select.addEventListener("change", () => void loadCity(select.value));

    ($("layer-select") as HTMLSelectElement).addEventListener("change", (ev) => {
      update(setLayer(state, (ev.target as HTMLSelectElement).value));
      void showLayer();
    });
    ($("scene-select") as HTMLSelectElement).addEventListener("change", (ev) => {
      update(setScene(state, (ev.target as HTMLSelectElement).value));
      void showLayer();
    });
    ($("variant-select") as HTMLSelectElement).addEventListener("change", (ev) => {
      update(setVariant(state, (ev.target as HTMLSelectElement).value));
      void showLayer();
    });

    $("tab-browse").addEventListener("click", () => setTab("browse"));
    $("tab-intervene").addEventListener("click", () => setTab("intervene"));
    $("tab-scenario").addEventListener("click", () => setTab("scenario"));
    $("submit").addEventListener("click", () => void submitIntervention());
    $("undo").addEventListener("click", () => {
      update(removeLastVertex(state));
      drawPolygon();
    });
    $("clear").addEventListener("click", () => {
      update(clearPolygon(state));
      drawPolygon();
    });
    $("trend").addEventListener("click", () => void showTrend());

    const canvas = $("draw") as HTMLCanvasElement;
    canvas.width = CANVAS_SIZE;
    canvas.height = CANVAS_SIZE;
    canvas.addEventListener("click", onCanvasClick);

    if (cities.length) {
      await loadCity(state.city && cities.some((c) => c.city_id === state.city) ? state.city : cities[0].city_id);
    }
    setTab(state.mode);
  } catch (err) {
    toast(err);
  }
}

void boot();
