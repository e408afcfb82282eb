/** View state: what the user is looking at, and the polygon being drawn.
 *
 * State updates are pure functions so the URL fragment can always be
 * regenerated; pasting a fragment back restores the session.
 */

import type { GridInfo } from "./api.js";

export type Mode = "browse" | "intervene" | "scenario";

export interface Vertex {
  x: number;
  y: number;
}

export interface ViewState {
  city: string | null;
  layer: string;
  scene: string | null;
  variant: string | null;
  mode: Mode;
  rcp: string | null;
  year: number | null;
  polygon: Vertex[];
}

export const initialState: ViewState = {
  city: null,
  layer: "lst",
  scene: null,
  variant: null,
  mode: "browse",
  rcp: null,
  year: null,
  polygon: [],
};

export function setLayer(s: ViewState, layer: string): ViewState {
  return { ...s, layer };
}

export function setScene(s: ViewState, scene: string | null): ViewState {
  return { ...s, scene };
}

export function setVariant(s: ViewState, variant: string | null): ViewState {
  return { ...s, variant };
}

export function setMode(s: ViewState, mode: Mode): ViewState {
  return { ...s, mode };
}

export function setScenario(s: ViewState, rcp: string | null, year: number | null): ViewState {
  return { ...s, rcp, year };
}

export function addVertex(s: ViewState, v: Vertex): ViewState {
  if (s.mode !== "intervene") return s; // polygon is editable only in intervention mode
  return { ...s, polygon: [...s.polygon, v] };
}

export function moveVertex(s: ViewState, index: number, v: Vertex): ViewState {
  if (s.mode !== "intervene" || index < 0 || index >= s.polygon.length) return s;
  const polygon = s.polygon.slice();
  polygon[index] = v;
  return { ...s, polygon };
}

export function removeLastVertex(s: ViewState): ViewState {
  if (s.mode !== "intervene" || s.polygon.length === 0) return s;
  return { ...s, polygon: s.polygon.slice(0, -1) };
}

export function clearPolygon(s: ViewState): ViewState {
  return { ...s, polygon: [] };
}

/** Submit gate: a polygon needs at least 3 vertices. */
export function canSubmit(s: ViewState): boolean {
  return s.mode === "intervene" && s.polygon.length >= 3;
}

// --- canvas <-> world mapping ------------------------------------------------

/** World coordinates of a canvas point, given how the grid is scaled on screen. */
export function canvasToWorld(grid: GridInfo, canvasW: number, canvasH: number,
                              cx: number, cy: number): Vertex {
  const x = grid.origin_x + (cx / canvasW) * grid.width * grid.pixel_size;
  const y = grid.origin_y - (cy / canvasH) * grid.height * grid.pixel_size;
  return { x, y };
}

export function worldToCanvas(grid: GridInfo, canvasW: number, canvasH: number,
                              v: Vertex): { cx: number; cy: number } {
  const cx = ((v.x - grid.origin_x) / (grid.width * grid.pixel_size)) * canvasW;
  const cy = ((grid.origin_y - v.y) / (grid.height * grid.pixel_size)) * canvasH;
  return { cx, cy };
}

/** Pixel indices under a canvas point (for the value readout). */
export function canvasToPixel(grid: GridInfo, canvasW: number, canvasH: number,
                              cx: number, cy: number): { row: number; col: number } {
  const col = Math.floor((cx / canvasW) * grid.width);
  const row = Math.floor((cy / canvasH) * grid.height);
  return {
    row: Math.min(Math.max(row, 0), grid.height - 1),
    col: Math.min(Math.max(col, 0), grid.width - 1),
  };
}

// --- URL fragment round trip -------------------------------------------------

export function encodeState(s: ViewState): string {
  const parts: string[] = [];
  const put = (k: string, v: string | number | null) => {
    if (v !== null && v !== "") parts.push(`${k}=${encodeURIComponent(String(v))}`);
  };
  put("city", s.city);
  put("layer", s.layer);
  put("scene", s.scene);
  put("variant", s.variant);
  put("mode", s.mode === "browse" ? null : s.mode);
  put("rcp", s.rcp);
  put("year", s.year);
  if (s.polygon.length) {
    put("poly", s.polygon.map((v) => `${v.x},${v.y}`).join(";"));
  }
  return parts.join("&");
}

export function decodeState(fragment: string): ViewState {
  const s: ViewState = { ...initialState, polygon: [] };
  const raw = fragment.startsWith("#") ? fragment.slice(1) : fragment;
  if (!raw) return s;
  for (const part of raw.split("&")) {
    const eq = part.indexOf("=");
    if (eq < 0) continue;
    const key = part.slice(0, eq);
    const value = decodeURIComponent(part.slice(eq + 1));
    switch (key) {
      case "city":
        s.city = value;
        break;
      case "layer":
        s.layer = value;
        break;
      case "scene":
        s.scene = value;
        break;
      case "variant":
        s.variant = value;
        break;
      case "mode":
        if (value === "intervene" || value === "scenario" || value === "browse") s.mode = value;
        break;
      case "rcp":
        s.rcp = value;
        break;
      case "year": {
        const year = Number(value);
        if (Number.isFinite(year)) s.year = year;
        break;
      }
      case "poly": {
        const polygon: Vertex[] = [];
        for (const pair of value.split(";")) {
          const [xs, ys] = pair.split(",");
          const x = Number(xs);
          const y = Number(ys);
          if (Number.isFinite(x) && Number.isFinite(y)) polygon.push({ x, y });
        }
        s.polygon = polygon;
        break;
      }
    }
  }
  return s;
}
