// End-to-end checks through the compiled CLI (npm test builds dist/ first).
import { spawn, spawnSync } from "child_process";
import * as fs from "fs";
import * as os from "os";
import * as path from "path";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { saveCheckpoint } from "../src/checkpoint";
import { HANDSHAKE } from "../src/bridge";
import { buildGenerator } from "../src/model";
import { decodePng, encodePng } from "../src/png";
import { makePair } from "./fixtures";

const tmp = fs.mkdtempSync(path.join(os.tmpdir(), "dc2g-cli-"));
const ckptDir = path.join(tmp, "ckpt");
const cliPath = path.join(__dirname, "..", "dist", "cli.js");

beforeAll(async () => {
  await saveCheckpoint(buildGenerator({ ngf: 1, seed: 2 }), ckptDir, { step: 0, config: { ngf: 1, seed: 2 } });
}, 120_000);

afterAll(() => fs.rmSync(tmp, { recursive: true, force: true }));

function frame(payload: Buffer): Buffer {
  const head = Buffer.alloc(4);
  head.writeUInt32BE(payload.length, 0);
  return Buffer.concat([head, payload]);
}

describe("cli", () => {
  it("predict writes a 256x256 PNG", () => {
    const inPath = path.join(tmp, "in.png");
    const outPath = path.join(tmp, "out.png");
    fs.writeFileSync(inPath, encodePng(makePair(0, 0, 0).input));
    const res = spawnSync("node", [cliPath, "predict", "--checkpoint", ckptDir, "--input", inPath, "--output", outPath]);
    expect(res.status).toBe(0);
    const img = decodePng(fs.readFileSync(outPath));
    expect([img.width, img.height]).toEqual([256, 256]);
  }, 120_000);

  it("serve answers a framed request over stdio", async () => {
    const proc = spawn("node", [cliPath, "serve", "--checkpoint", ckptDir], {
      stdio: ["pipe", "pipe", "inherit"],
      env: { ...process.env, DC2G_BRIDGE: "stdio" },
    });
    const chunks: Buffer[] = [];
    proc.stdout.on("data", (c) => chunks.push(c));
    proc.stdin.write(HANDSHAKE);
    proc.stdin.write(frame(encodePng(makePair(0, 1, 32).input)));
    const code = await new Promise<number>((resolve) => {
      const poll = () => {
        const buf = Buffer.concat(chunks);
        if (buf.length >= HANDSHAKE.length + 4) {
          const n = buf.readUInt32BE(HANDSHAKE.length);
          if (buf.length >= HANDSHAKE.length + 4 + n) {
            proc.stdin.end();
            proc.on("exit", resolve);
            return;
          }
        }
        setTimeout(poll, 50);
      };
      poll();
    });
    expect(code).toBe(0);
    const buf = Buffer.concat(chunks);
    expect(buf.subarray(0, HANDSHAKE.length).equals(HANDSHAKE)).toBe(true);
    const n = buf.readUInt32BE(HANDSHAKE.length);
    const img = decodePng(buf.subarray(HANDSHAKE.length + 4, HANDSHAKE.length + 4 + n));
    expect([img.width, img.height]).toEqual([256, 256]);
  }, 120_000);

  it("serve exits nonzero on a zero-length frame, writing no response", async () => {
    const proc = spawn("node", [cliPath, "serve", "--checkpoint", ckptDir], {
      stdio: ["pipe", "pipe", "ignore"],
      env: { ...process.env, DC2G_BRIDGE: "stdio" },
    });
    const chunks: Buffer[] = [];
    proc.stdout.on("data", (c) => chunks.push(c));
    proc.stdin.write(Buffer.concat([HANDSHAKE, Buffer.alloc(4)]));
    const code = await new Promise<number>((resolve) => proc.on("exit", resolve));
    expect(code).not.toBe(0);
    expect(Buffer.concat(chunks).equals(HANDSHAKE)).toBe(true);
  }, 120_000);

  const havePlannerToolkit =
    spawnSync("python3", ["-c", "import dc2g.estimator"], { timeout: 30_000 }).status === 0;

  it.skipIf(!havePlannerToolkit)(
    "planner-side bridge client gets byte-stable estimates from serve",
    () => {
      const script = [
        "import os, sys",
        "import numpy as np",
        "os.environ['DC2G_BRIDGE'] = 'stdio'",
        "from dc2g.estimator import BridgeClient",
        `client = BridgeClient.from_env(cmd=['node', ${JSON.stringify(cliPath)}, 'serve', '--checkpoint', ${JSON.stringify(ckptDir)}], timeout_s=120)`,
        "img = np.zeros((256, 256, 3), dtype=np.uint8)",
        "a = client.estimate(img)",
        "b = client.estimate(img)",
        "client.close()",
        "assert a.shape == (256, 256, 3)",
        "assert (a == b).all()",
        "print('CROSS-LANG-OK')",
      ].join("\n");
      const res = spawnSync("python3", ["-c", script], { timeout: 180_000 });
      expect(res.status, String(res.stderr)).toBe(0);
      expect(String(res.stdout)).toContain("CROSS-LANG-OK");
    },
    180_000
  );
});
