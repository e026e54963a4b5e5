/**
 * E2E harness: spawns the broker service (`hab serve`) on a scratch database
 * and puts a recording HTTP proxy in front of it, so tests can both drive
 * the real API and audit every request body that left the client.
 */

import { ChildProcess, spawn } from "node:child_process";
import { mkdtempSync, rmSync, writeFileSync } from "node:fs";
import http from "node:http";
import net from "node:net";
import { tmpdir } from "node:os";
import { join } from "node:path";

export interface RecordedRequest {
  method: string;
  path: string;
  body: Buffer;
}

export interface Harness {
  /** Base URL of the recording proxy (what the console client talks to). */
  baseUrl: string;
  /** Base URL of the service itself, bypassing the proxy. */
  directUrl: string;
  workDir: string;
  logDir: string;
  requests: RecordedRequest[];
  stop(): Promise<void>;
}

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const srv = net.createServer();
    srv.listen(0, "127.0.0.1", () => {
      const addr = srv.address();
      if (addr && typeof addr === "object") {
        const port = addr.port;
        srv.close(() => resolve(port));
      } else {
        srv.close(() => reject(new Error("no port assigned")));
      }
    });
  });
}

async function waitForHealth(url: string, child: ChildProcess, stderr: string[], timeoutMs = 30_000) {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    if (child.exitCode !== null) {
      throw new Error(`service exited early (${child.exitCode}):\n${stderr.join("")}`);
    }
    try {
      const res = await fetch(url + "/health");
      if (res.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 200));
  }
  throw new Error(`service did not become healthy:\n${stderr.join("")}`);
}

function startProxy(targetPort: number, requests: RecordedRequest[]): Promise<http.Server> {
  const server = http.createServer((req, res) => {
    const chunks: Buffer[] = [];
    req.on("data", (c) => chunks.push(c));
    req.on("end", () => {
      const body = Buffer.concat(chunks);
      requests.push({ method: req.method ?? "", path: req.url ?? "", body });
      const upstream = http.request(
        {
          host: "127.0.0.1",
          port: targetPort,
          method: req.method,
          path: req.url,
          headers: { ...req.headers, host: `127.0.0.1:${targetPort}` },
        },
        (upRes) => {
          res.writeHead(upRes.statusCode ?? 502, upRes.headers);
          upRes.pipe(res);
        },
      );
      upstream.on("error", () => {
        res.writeHead(502);
        res.end("proxy error");
      });
      upstream.end(body);
    });
  });
  return new Promise((resolve) => {
    server.listen(0, "127.0.0.1", () => resolve(server));
  });
}

export async function startHarness(): Promise<Harness> {
  const workDir = mkdtempSync(join(tmpdir(), "hab-console-"));
  const logDir = join(workDir, "logs");
  const servicePort = await freePort();
  const configPath = join(workDir, "config.json");
  writeFileSync(
    configPath,
    JSON.stringify({
      listen_host: "127.0.0.1",
      listen_port: servicePort,
      database_path: join(workDir, "broker.db"),
      log_dir: logDir,
      security_level: 80,
      inspector_poll_interval: 0.25,
    }),
  );

  const child = spawn("hab", ["serve", "--config", configPath], {
    stdio: ["ignore", "pipe", "pipe"],
  });
  const stderr: string[] = [];
  child.stdout?.on("data", (d) => stderr.push(d.toString()));
  child.stderr?.on("data", (d) => stderr.push(d.toString()));

  const directUrl = `http://127.0.0.1:${servicePort}`;
  await waitForHealth(directUrl, child, stderr);

  const requests: RecordedRequest[] = [];
  const proxy = await startProxy(servicePort, requests);
  const addr = proxy.address();
  const proxyPort = addr && typeof addr === "object" ? addr.port : 0;

  return {
    baseUrl: `http://127.0.0.1:${proxyPort}`,
    directUrl,
    workDir,
    logDir,
    requests,
    stop: async () => {
      await new Promise<void>((r) => proxy.close(() => r()));
      child.kill("SIGTERM");
      await new Promise<void>((resolve) => {
        const t = setTimeout(() => {
          child.kill("SIGKILL");
          resolve();
        }, 5000);
        child.on("exit", () => {
          clearTimeout(t);
          resolve();
        });
      });
      rmSync(workDir, { recursive: true, force: true });
    },
  };
}

/** Every textual disguise a byte string could wear inside a JSON body. */
export function needleVariants(data: Uint8Array): string[] {
  const buf = Buffer.from(data);
  return [
    buf.toString("latin1"),
    buf.toString("base64"),
    buf.toString("hex"),
    buf.toString("hex").toUpperCase(),
  ];
}

export function scanRequests(requests: RecordedRequest[], needles: string[]): string[] {
  const hits: string[] = [];
  for (const req of requests) {
    const body = req.body.toString("latin1");
    for (const needle of needles) {
      if (needle.length >= 8 && body.includes(needle)) {
        hits.push(`${req.method} ${req.path}: matched ${needle.slice(0, 16)}...`);
      }
    }
  }
  return hits;
}
