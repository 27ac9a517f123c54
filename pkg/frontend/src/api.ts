/**
 * Typed client for the engine service.
 *
 * Transport is injected so tests can intercept every request and verify
 * the views display service numbers untouched. Long sweeps come back as
 * job tickets (HTTP 202); `postAnalysis` polls them to completion so
 * callers always receive a finished result document.
 */

import { canonicalStringify, Json } from "./serialize.js";
import {
  DatasetSummary,
  JobStatus,
  JobTicket,
  ResultDocument,
  ServiceError,
} from "./types.js";

export interface TransportResponse {
  status: number;
  body: unknown;
}

export interface Transport {
  post(path: string, body: Json): Promise<TransportResponse>;
  get(path: string): Promise<TransportResponse>;
}

export class FetchTransport implements Transport {
  constructor(private baseUrl: string) {}

  private async decode(response: Response): Promise<TransportResponse> {
    return { status: response.status, body: await response.json() };
  }

  async post(path: string, body: Json): Promise<TransportResponse> {
    const response = await fetch(this.baseUrl + path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    return this.decode(response);
  }

  async get(path: string): Promise<TransportResponse> {
    return this.decode(await fetch(this.baseUrl + path));
  }
}

export class ApiError extends Error {
  constructor(public status: number, public detail: ServiceError) {
    super(`${detail.error}: ${detail.detail}`);
  }
}

const sleep = (ms: number) => new Promise((resolve) => setTimeout(resolve, ms));

export class ApiClient {
  constructor(
    private transport: Transport,
    private pollIntervalMs = 150,
    private pollTimeoutMs = 120_000,
  ) {}

  private fail(response: TransportResponse): never {
    throw new ApiError(response.status, response.body as ServiceError);
  }

  async health(): Promise<{ status: string; engine_version: string }> {
    const r = await this.transport.get("/health");
    if (r.status !== 200) this.fail(r);
    return r.body as { status: string; engine_version: string };
  }

  async uploadDataset(body: Json): Promise<DatasetSummary> {
    const r = await this.transport.post("/datasets", body);
    if (r.status !== 201) this.fail(r);
    return r.body as DatasetSummary;
  }

  /**
   * Run an analysis endpoint; the request's canonical string rides along
   * as client_token so the caller can match responses to drafts.
   */
  async postAnalysis<R>(path: string, fragment: Json): Promise<ResultDocument<R>> {
    const token = canonicalStringify(fragment);
    const body = { ...(fragment as Record<string, Json>), client_token: token };
    const r = await this.transport.post(path, body);
    if (r.status === 200) return r.body as ResultDocument<R>;
    if (r.status !== 202) this.fail(r);
    const ticket = r.body as JobTicket;
    const document = await this.pollJob(ticket.job_id);
    return document as ResultDocument<R>;
  }

  async pollJob(jobId: string): Promise<ResultDocument<unknown>> {
    const deadline = Date.now() + this.pollTimeoutMs;
    for (;;) {
      const r = await this.transport.get(`/jobs/${jobId}`);
      if (r.status !== 200) this.fail(r);
      const job = r.body as JobStatus;
      if (job.status === "done" && job.result) return job.result;
      if (job.status === "failed") {
        throw new ApiError(500, job.error ?? { error: "JobFailed", detail: jobId });
      }
      if (Date.now() > deadline) {
        throw new ApiError(504, { error: "JobTimeout", detail: jobId });
      }
      await sleep(this.pollIntervalMs);
    }
  }
}

/**
 * Serializes in-flight requests per view: responses whose token no longer
 * matches the latest issued draft are dropped, so a slow early response
 * can never overwrite a newer one.
 */
export class LatestRequestGate {
  private latestToken: string | null = null;

  issue(fragment: Json): string {
    this.latestToken = canonicalStringify(fragment);
    return this.latestToken;
  }

  isCurrent(token: string | undefined): boolean {
    return token !== undefined && token === this.latestToken;
  }
}
