/** Development server: static page hosting plus a WebSocket to TCP
 * relay so the browser can reach the frame service's stream socket.
 *
 *   node dist/bridge.js [--port 8787] [--service PORT] [--host HOST]
 *
 * Without --service it spawns `python3 -m hypray.service --port 0` and
 * relays to whatever port the service reports.  Each WebSocket
 * connection gets its own TCP connection; bytes pass through untouched
 * in both directions, so the browser speaks the exact wire protocol.
 */
import { spawn, ChildProcess } from "node:child_process";
import { createServer } from "node:http";
import { createConnection } from "node:net";
import { readFile } from "node:fs/promises";
import { extname, join, normalize } from "node:path";
import { fileURLToPath } from "node:url";

import { WebSocketServer, WebSocket } from "ws";

const MIME: Record<string, string> = {
  ".html": "text/html; charset=utf-8",
  ".js": "text/javascript; charset=utf-8",
  ".css": "text/css; charset=utf-8",
  ".map": "application/json",
};

function argValue(flag: string): string | undefined {
  const i = process.argv.indexOf(flag);
  return i >= 0 ? process.argv[i + 1] : undefined;
}

function spawnService(): Promise<{ port: number; child: ChildProcess }> {
  return new Promise((resolve, reject) => {
    const child = spawn("python3", ["-m", "hypray.service", "--port", "0"], {
      stdio: ["ignore", "pipe", "inherit"],
    });
    let buffer = "";
    child.stdout!.on("data", (chunk: Buffer) => {
      buffer += chunk.toString();
      const match = buffer.match(/listening (\d+)/);
      if (match) resolve({ port: Number(match[1]), child });
    });
    child.on("exit", (code) =>
      reject(new Error(`frame service exited with code ${code}`)),
    );
  });
}

async function main(): Promise<void> {
  const listenPort = Number(argValue("--port") ?? 8787);
  const serviceHost = argValue("--host") ?? "127.0.0.1";
  let servicePort: number;
  let child: ChildProcess | null = null;
  if (argValue("--service") !== undefined) {
    servicePort = Number(argValue("--service"));
  } else {
    ({ port: servicePort, child } = await spawnService());
    console.log(`spawned frame service on port ${servicePort}`);
  }

  const root = join(fileURLToPath(import.meta.url), "..", "..");
  const http = createServer(async (req, res) => {
    const path = req.url === "/" ? "/index.html" : (req.url ?? "/");
    const file = normalize(join(root, path));
    if (!file.startsWith(root)) {
      res.writeHead(403).end();
      return;
    }
    try {
      const body = await readFile(file);
      res.writeHead(200, {
        "content-type": MIME[extname(file)] ?? "application/octet-stream",
      });
      res.end(body);
    } catch {
      res.writeHead(404).end("not found");
    }
  });

  const wss = new WebSocketServer({ server: http, path: "/ws" });
  wss.on("connection", (ws: WebSocket) => {
    const tcp = createConnection({ host: serviceHost, port: servicePort });
    tcp.on("data", (data) => ws.send(data, { binary: true }));
    tcp.on("close", () => ws.close());
    tcp.on("error", () => ws.close());
    ws.on("message", (data: Buffer) => tcp.write(data));
    ws.on("close", () => tcp.destroy());
    ws.on("error", () => tcp.destroy());
  });

  http.listen(listenPort, "127.0.0.1", () => {
    const addr = http.address();
    const port = typeof addr === "object" && addr !== null ? addr.port : listenPort;
    console.log(`viewer at http://127.0.0.1:${port}/`);
  });

  const shutdown = () => {
    http.close();
    child?.kill();
    process.exit(0);
  };
  process.on("SIGINT", shutdown);
  process.on("SIGTERM", shutdown);
}

main().catch((err) => {
  console.error(err);
  process.exit(1);
});
