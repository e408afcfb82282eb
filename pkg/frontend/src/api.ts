/** Typed client for the heatlab HTTP API.
 *
 * Every JSON response is appended to `log`, so tests (and the traceability
 * invariant: no number on screen without an API field behind it) can check
 * rendered values against exactly what the service sent.
 */

export interface ApiErrorBody {
  code: string;
  message: string;
  detail?: unknown;
}

export class ApiError extends Error {
  readonly code: string;
  readonly status: number;
  readonly detail: unknown;

  constructor(status: number, body: ApiErrorBody) {
    super(body.message);
    this.name = "ApiError";
    this.code = body.code;
    this.status = status;
    this.detail = body.detail;
  }
}

export interface GridInfo {
  width: number;
  height: number;
  origin_x: number;
  origin_y: number;
  pixel_size: number;
  epsg: number;
}

export interface ScenarioInfo {
  rcp: string;
  horizon_year: number;
  monthly_delta: number[];
  source_label: string;
}

export interface CitySummary {
  city_id: string;
  grid: GridInfo;
  utc_offset_hours: number;
  n_scenes: number;
  scene_ids: string[];
  filtered_scene_ids: string[];
  layers: string[];
  variants: string[];
  scenarios: ScenarioInfo[];
  issues: string[];
}

export interface SceneRow {
  scene_id: string;
  timestamp: string;
  cloud_fraction: number;
  air_temp_c: number | null;
  passes_filter: boolean;
}

export interface LayerStats {
  layer: string;
  scene_id: string | null;
  variant: string | null;
  stats: { min: number | null; mean: number | null; max: number | null; n: number };
  palette: string;
  vmin: number;
  vmax: number;
  png_url: string;
  legend?: { layer: string; palette: string; vmin: number; vmax: number; stops: unknown };
}

export interface LayerValue {
  layer: string;
  row: number;
  col: number;
  x: number;
  y: number;
  value: number | null;
}

export interface ProfileDoc {
  side: "internal" | "spillover";
  bin_edges: number[];
  mean_dt: (number | null)[];
  std_dt: (number | null)[];
  count: number[];
  mean_dist: (number | null)[];
}

export interface ProfilesResponse {
  city_id: string;
  kind: "internal" | "spillover";
  truth: ProfileDoc;
  variants: Record<string, { profile: ProfileDoc; metrics: Record<string, number> }>;
}

export interface ForecastReport {
  scenario: ScenarioInfo;
  variant: string;
  report: {
    threshold_c: number;
    urban_pixels: number;
    exceed_pixels: number;
    exceed_area_km2: number;
    exceed_fraction: number;
    mean_urban_anomaly: number;
  };
  per_scene: unknown[];
  out_of_validated_range: boolean | null;
  anomaly_png_url: string;
}

export interface TransectSample {
  distance_m: number;
  x: number;
  y: number;
  row: number;
  col: number;
  before_c: number | null;
  after_c: number | null;
  delta_c: number | null;
  in_mask: boolean;
}

export interface InterventionRequest {
  polygon: [number, number][];
  target_category?: string;
  statistic?: "median" | "mean";
  jitter_fraction?: number;
  seed?: number;
  scene_id?: string;
  variant?: string;
}

export interface InterventionResult {
  request_id: string;
  spec: Record<string, unknown>;
  scene_id: string;
  variant: string;
  replaced_pixels: number;
  mask_pixels: number;
  area_m2: number;
  mean_delta_in_mask: number;
  donor: Record<string, unknown>;
  transect: TransectSample[];
  internal_profile: ProfileDoc;
  spillover_profile: ProfileDoc;
  layers?: Record<string, string>;
}

export interface InterventionRow {
  request_id: string;
  scene_id: string;
  variant: string;
  replaced_pixels: number;
  area_m2: number;
  mean_delta_in_mask: number;
}

export interface VersionInfo {
  name: string;
  version: string;
  api_version: number;
  kernel_backend: string;
}

export interface RequestRecord {
  method: string;
  path: string;
  status: number;
  body: unknown;
}

function query(params: Record<string, string | number | null | undefined>): string {
  const parts: string[] = [];
  for (const [k, v] of Object.entries(params)) {
    if (v !== null && v !== undefined) parts.push(`${k}=${encodeURIComponent(String(v))}`);
  }
  return parts.length ? `?${parts.join("&")}` : "";
}

export class Api {
  readonly log: RequestRecord[] = [];

  constructor(private readonly base: string = "") {}

  requestCount(method: string): number {
    return this.log.filter((r) => r.method === method).length;
  }

  private async call<T>(method: string, path: string, payload?: unknown): Promise<T> {
    const init: RequestInit = { method };
    if (payload !== undefined) {
      init.body = JSON.stringify(payload);
      init.headers = { "content-type": "application/json" };
    }
    const resp = await fetch(this.base + path, init);
    const body: unknown = await resp.json();
    this.log.push({ method, path, status: resp.status, body });
    if (!resp.ok) {
      const err = (body as { error?: ApiErrorBody }).error;
      throw new ApiError(resp.status, err ?? { code: "internal_error", message: `HTTP ${resp.status}` });
    }
    return body as T;
  }

  version(): Promise<VersionInfo> {
    return this.call("GET", "/api/version");
  }

  cities(): Promise<CitySummary[]> {
    return this.call("GET", "/api/cities");
  }

  city(cityId: string): Promise<CitySummary> {
    return this.call("GET", `/api/cities/${cityId}`);
  }

  scenes(cityId: string): Promise<SceneRow[]> {
    return this.call("GET", `/api/cities/${cityId}/scenes`);
  }

  layerStats(cityId: string, layer: string, scene?: string | null, variant?: string | null): Promise<LayerStats> {
    return this.call("GET", `/api/cities/${cityId}/layers/${layer}${query({ scene, variant })}`);
  }

  layerValue(cityId: string, layer: string, row: number, col: number,
             scene?: string | null, variant?: string | null): Promise<LayerValue> {
    return this.call("GET", `/api/cities/${cityId}/layers/${layer}/value${query({ row, col, scene, variant })}`);
  }

  layerPngUrl(cityId: string, layer: string, scene?: string | null, variant?: string | null): string {
    return `${this.base}/api/cities/${cityId}/layers/${layer}.png${query({ scene, variant })}`;
  }

  profiles(cityId: string, kind: "internal" | "spillover", variant?: string | null): Promise<ProfilesResponse> {
    return this.call("GET", `/api/cities/${cityId}/profiles${query({ kind, variant })}`);
  }

  gradient(cityId: string, variant?: string | null): Promise<Record<string, unknown>> {
    return this.call("GET", `/api/cities/${cityId}/gradient${query({ variant })}`);
  }

  sourceSink(cityId: string, variant?: string | null): Promise<Record<string, unknown>> {
    return this.call("GET", `/api/cities/${cityId}/source-sink${query({ variant })}`);
  }

  scenarios(cityId: string): Promise<{ city_id: string; scenarios: ScenarioInfo[] }> {
    return this.call("GET", `/api/cities/${cityId}/scenarios`);
  }

  forecast(cityId: string, rcp: string, year: number, variant?: string | null): Promise<ForecastReport> {
    return this.call("GET", `/api/cities/${cityId}/scenarios${query({ rcp, year, variant })}`);
  }

  interventions(cityId: string): Promise<InterventionRow[]> {
    return this.call("GET", `/api/cities/${cityId}/interventions`);
  }

  submitIntervention(cityId: string, req: InterventionRequest): Promise<InterventionResult> {
    return this.call("POST", `/api/cities/${cityId}/interventions`, req);
  }

  intervention(cityId: string, requestId: string): Promise<InterventionResult> {
    return this.call("GET", `/api/cities/${cityId}/interventions/${requestId}`);
  }
}
