/**
 * Thin typed client over the broker's HTTP+JSON endpoint table.  Every call
 * in this file maps 1:1 onto a documented endpoint; nothing else is used.
 */

export class ApiError extends Error {
  constructor(readonly status: number, readonly detail: string) {
    super(`HTTP ${status}: ${detail}`);
  }
}

export interface RegisterResult {
  user_id: string;
  broker_id: number;
  attributes: string[];
  user_key_b64: string;
  public_params_b64: string;
}

export interface LoginResult {
  token: string;
  user_id: string;
  broker_id: number;
  expires_at: number;
  public_params_b64: string;
}

export interface ReviewSummary {
  review_id: string;
  dp_id: string;
  patient_id: string;
  status: string;
  submitted_at: number;
  decided_at: number | null;
  target_file_id: string | null;
  payload_hex?: string;
  transport_key_hex?: string;
}

export interface FileMeta {
  file_id: string;
  patient_id: string;
  doc_id: string;
  threshold: number;
  total: number;
  cloud_ids: string[];
  created_at: number;
  updated_at: number;
  version: number;
}

export interface DecisionResult {
  status: "approved" | "rejected";
  review_id?: string;
  file?: FileMeta;
}

export interface AlertRow {
  alert_id: string;
  rule_id: string;
  bl_seq: number | null;
  gk_seq: number | null;
  description: string;
  severity: string;
  recipients: string[];
  raised_at: number;
}

export interface NotificationRow {
  note_id: string;
  recipient: string;
  kind: string;
  body: string;
  created_at: number;
}

export interface HealthInfo {
  status: string;
  brokers: number;
  backends: Record<string, boolean>;
  cloud_ids: string[];
  default_threshold: number;
  default_total: number;
}

export class ApiClient {
  constructor(readonly baseUrl: string) {}

  private async request<T>(
    method: string,
    path: string,
    opts: { token?: string; body?: unknown } = {},
  ): Promise<T> {
    const headers: Record<string, string> = {};
    if (opts.token) headers["Authorization"] = `Bearer ${opts.token}`;
    if (opts.body !== undefined) headers["Content-Type"] = "application/json";
    const res = await fetch(this.baseUrl + path, {
      method,
      headers,
      body: opts.body !== undefined ? JSON.stringify(opts.body) : undefined,
    });
    const text = await res.text();
    if (!res.ok) {
      let detail = text;
      try {
        detail = JSON.parse(text).detail ?? text;
      } catch {
        // non-JSON error body; keep raw text
      }
      throw new ApiError(res.status, String(detail));
    }
    return JSON.parse(text) as T;
  }

  register(body: {
    username: string;
    password: string;
    kind: string;
    attributes?: string[];
    grant?: Record<string, unknown>;
  }): Promise<RegisterResult> {
    return this.request("POST", "/register", { body });
  }

  login(username: string, password: string): Promise<LoginResult> {
    return this.request("POST", "/login", { body: { username, password } });
  }

  submitUpload(
    token: string,
    body: { patient_id: string; payload_b64: string; transport_key_b64?: string; target_file_id?: string },
  ): Promise<ReviewSummary> {
    return this.request("POST", "/uploads", { token, body });
  }

  reviews(token: string): Promise<{ reviews: ReviewSummary[] }> {
    return this.request("GET", "/reviews", { token });
  }

  decide(
    token: string,
    reviewId: string,
    body: {
      decision: "approve" | "reject";
      policy?: string;
      cloud_ids?: string[];
      threshold?: number;
      ciphertext_b64?: string;
    },
  ): Promise<DecisionResult> {
    return this.request("POST", `/reviews/${reviewId}/decision`, { token, body });
  }

  listFiles(token: string): Promise<{ files: FileMeta[] }> {
    return this.request("GET", "/files", { token });
  }

  retrieveFile(token: string, fileId: string): Promise<{ file_id: string; ciphertext_b64: string }> {
    return this.request("GET", `/files/${fileId}`, { token });
  }

  updatePolicy(token: string, fileId: string, policy: string): Promise<{ file_id: string; policy: string }> {
    return this.request("POST", `/files/${fileId}/policy`, { token, body: { policy } });
  }

  revoke(
    token: string,
    body: { target_user_id?: string; attribute?: string; file_id?: string; undo?: boolean },
  ): Promise<{ status: string }> {
    return this.request("POST", "/revocations", { token, body });
  }

  requestAccess(token: string, fileId: string, message = ""): Promise<{ request_id: string; status: string }> {
    return this.request("POST", "/access-requests", { token, body: { file_id: fileId, message } });
  }

  listAccessRequests(token: string): Promise<{ requests: Record<string, unknown>[] }> {
    return this.request("GET", "/access-requests", { token });
  }

  notifications(token: string): Promise<{ notifications: NotificationRow[] }> {
    return this.request("GET", "/notifications", { token });
  }

  alerts(token: string): Promise<{ alerts: AlertRow[] }> {
    return this.request("GET", "/alerts", { token });
  }

  emergencyRetrieve(
    token: string,
    patientId: string,
    fileId: string,
  ): Promise<{ file_id: string; ciphertext_b64: string; emergency: boolean }> {
    return this.request("POST", `/emergency/${patientId}/${fileId}`, { token });
  }

  chainStatus(): Promise<{ status: string; broken_at: number | null; head_seq: number; head_hash: string }> {
    return this.request("GET", "/audit/chain-status");
  }

  health(): Promise<HealthInfo> {
    return this.request("GET", "/health");
  }
}
