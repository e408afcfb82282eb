/** Display models: pure mappings from API payloads to what gets rendered.
 *
 * No arithmetic on the data here. Every number in a model is copied verbatim
 * from an API field, which is what the contract tests verify.
 */

import type {
  ApiError,
  CitySummary,
  ForecastReport,
  InterventionRequest,
  InterventionResult,
  LayerStats,
  LayerValue,
  ProfileDoc,
} from "./api.js";
import type { ViewState } from "./state.js";

export interface Row {
  label: string;
  value: number | string | null;
  unit?: string;
}

export interface Series {
  label: string;
  xs: (number | null)[];
  ys: (number | null)[];
}

export function cityOverview(city: CitySummary): Row[] {
  return [
    { label: "City", value: city.city_id },
    { label: "Grid", value: `${city.grid.width} x ${city.grid.height}` },
    { label: "Pixel size", value: city.grid.pixel_size, unit: "m" },
    { label: "Scenes", value: city.n_scenes },
    { label: "Usable scenes", value: city.filtered_scene_ids.length },
    { label: "Variants", value: city.variants.join(", ") },
  ];
}

export function layerPanel(doc: LayerStats): { title: string; rows: Row[]; pngUrl: string } {
  return {
    title: doc.scene_id ? `${doc.layer} (${doc.scene_id})` : doc.layer,
    pngUrl: doc.png_url,
    rows: [
      { label: "Min", value: doc.stats.min },
      { label: "Mean", value: doc.stats.mean },
      { label: "Max", value: doc.stats.max },
      { label: "Pixels", value: doc.stats.n },
      { label: "Scale", value: `${doc.vmin} to ${doc.vmax} (${doc.palette})` },
    ],
  };
}

export function pixelReadout(v: LayerValue): Row[] {
  return [
    { label: "Pixel", value: `${v.row}, ${v.col}` },
    { label: "X", value: v.x, unit: "m" },
    { label: "Y", value: v.y, unit: "m" },
    { label: v.layer, value: v.value },
  ];
}

export function scenarioPanel(r: ForecastReport): {
  badge: number;
  warnOutOfRange: boolean;
  rows: Row[];
  anomalyPngUrl: string;
} {
  return {
    badge: r.report.mean_urban_anomaly,
    // null means no extrapolation report exists; only flag a definite breach
    warnOutOfRange: r.out_of_validated_range === true,
    anomalyPngUrl: r.anomaly_png_url,
    rows: [
      { label: "Scenario", value: `RCP ${r.scenario.rcp}, ${r.scenario.horizon_year}` },
      { label: "Variant", value: r.variant },
      { label: "Threshold", value: r.report.threshold_c, unit: "C" },
      { label: "Urban pixels", value: r.report.urban_pixels },
      { label: "Exceeding pixels", value: r.report.exceed_pixels },
      { label: "Exceeding area", value: r.report.exceed_area_km2, unit: "km2" },
      { label: "Exceeding fraction", value: r.report.exceed_fraction },
      { label: "Mean urban anomaly", value: r.report.mean_urban_anomaly, unit: "C" },
    ],
  };
}

/** Exceed-fraction trend across a list of forecasts, in payload order. */
export function scenarioTrend(reports: ForecastReport[]): {
  labels: string[];
  values: number[];
} {
  return {
    labels: reports.map((r) => `${r.scenario.rcp}/${r.scenario.horizon_year}`),
    values: reports.map((r) => r.report.exceed_fraction),
  };
}

export function interventionPanel(res: InterventionResult): {
  badge: number;
  requestId: string;
  rows: Row[];
  layerUrls: Record<string, string>;
} {
  return {
    badge: res.mean_delta_in_mask,
    requestId: res.request_id,
    layerUrls: res.layers ?? {},
    rows: [
      { label: "Request", value: res.request_id },
      { label: "Scene", value: res.scene_id },
      { label: "Variant", value: res.variant },
      { label: "Replaced pixels", value: res.replaced_pixels },
      { label: "Area", value: res.area_m2, unit: "m2" },
      { label: "Mean delta in mask", value: res.mean_delta_in_mask, unit: "C" },
    ],
  };
}

export function transectSeries(res: InterventionResult): Series[] {
  const xs = res.transect.map((s) => s.distance_m);
  return [
    { label: "before", xs, ys: res.transect.map((s) => s.before_c) },
    { label: "after", xs, ys: res.transect.map((s) => s.after_c) },
    { label: "delta", xs, ys: res.transect.map((s) => s.delta_c) },
  ];
}

export function profileSeries(profile: ProfileDoc): Series {
  return { label: profile.side, xs: profile.mean_dist, ys: profile.mean_dt };
}

/** Build the POST body from the drawn polygon. Callers gate on canSubmit. */
export function toInterventionRequest(s: ViewState): InterventionRequest {
  const req: InterventionRequest = {
    polygon: s.polygon.map((v) => [v.x, v.y] as [number, number]),
  };
  if (s.scene) req.scene_id = s.scene;
  if (s.variant) req.variant = s.variant;
  return req;
}

/** Actionable text per error code; the code itself is always shown verbatim. */
export function errorGuidance(err: ApiError): string {
  switch (err.code) {
    case "mask_not_built":
      return "The polygon covers no convertible pixels. Draw over built-up blocks " +
        "(not water or existing vegetation) and submit again.";
    case "invalid_polygon":
      return "The polygon is degenerate or self-intersecting. Add at least 3 vertices " +
        "and avoid crossing edges.";
    case "analysis_pending":
      return "That result has not been computed yet. Run the analysis first.";
    case "grid_too_large":
      return "This city is too large for synchronous simulation.";
    default:
      return err.message;
  }
}
