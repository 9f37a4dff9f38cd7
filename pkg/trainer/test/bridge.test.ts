import * as net from "net";
import { PassThrough } from "stream";

import { describe, expect, it } from "vitest";

import { HANDSHAKE, ModelEstimator, ProtocolError, serveConnection, serveTcp } from "../src/bridge";
import { buildGenerator } from "../src/model";
import { decodePng, encodePng } from "../src/png";
import { makePair } from "./fixtures";

function frame(payload: Buffer): Buffer {
  const head = Buffer.alloc(4);
  head.writeUInt32BE(payload.length, 0);
  return Buffer.concat([head, payload]);
}

async function collect(stream: PassThrough): Promise<Buffer> {
  const chunks: Buffer[] = [];
  stream.on("data", (c) => chunks.push(c));
  await new Promise((r) => setTimeout(r, 50));
  return Buffer.concat(chunks);
}

const estimator = new ModelEstimator(buildGenerator({ ngf: 1, seed: 0 }));

describe("bridge server", () => {
  it("answers framed requests in order after a handshake", async () => {
    const input = new PassThrough();
    const output = new PassThrough();
    const reqs = [0, 1, 2].map((m) => encodePng(makePair(0, m, 32 * m).input));
    input.write(HANDSHAKE);
    for (const r of reqs) input.write(frame(r));
    input.end();
    const served = await serveConnection(estimator, input, output);
    expect(served).toBe(3);
    const out = await collect(output);
    expect(out.subarray(0, HANDSHAKE.length).equals(HANDSHAKE)).toBe(true);
    let off = HANDSHAKE.length;
    for (const r of reqs) {
      const n = out.readUInt32BE(off);
      const png = out.subarray(off + 4, off + 4 + n);
      const img = decodePng(png);
      expect([img.width, img.height]).toEqual([256, 256]);
      const direct = decodePng(estimator.estimate(r));
      expect(Buffer.from(img.data).equals(Buffer.from(direct.data))).toBe(true);
      off += 4 + n;
    }
    expect(off).toBe(out.length); // nothing extra on the wire
  }, 120_000);

  it("refuses a bad handshake without serving", async () => {
    const input = new PassThrough();
    const output = new PassThrough();
    input.write(Buffer.from("DC2G/2 256 256\n"));
    input.end();
    await expect(serveConnection(estimator, input, output)).rejects.toThrow(ProtocolError);
    const out = await collect(output);
    expect(out.equals(HANDSHAKE)).toBe(true); // own handshake only, no frames
  });

  it("rejects zero-length frames without writing a response", async () => {
    const input = new PassThrough();
    const output = new PassThrough();
    const zero = Buffer.alloc(4);
    input.write(Buffer.concat([HANDSHAKE, zero]));
    input.end();
    await expect(serveConnection(estimator, input, output)).rejects.toThrow(/zero-length/);
    const out = await collect(output);
    expect(out.equals(HANDSHAKE)).toBe(true);
  });

  it("rejects non-256 request images", async () => {
    const input = new PassThrough();
    const output = new PassThrough();
    const small = encodePng({ width: 100, height: 100, data: new Uint8Array(100 * 100 * 3) });
    input.write(Buffer.concat([HANDSHAKE, frame(small)]));
    input.end();
    await expect(serveConnection(estimator, input, output)).rejects.toThrow(/100x100/);
  });

  it("serves over tcp", async () => {
    const server = await serveTcp(estimator, "127.0.0.1", 0, 1);
    const port = (server.address() as net.AddressInfo).port;
    const socket = net.createConnection(port, "127.0.0.1");
    const req = encodePng(makePair(1, 0, 0).input);
    const received: Buffer[] = [];
    socket.on("data", (c) => received.push(c));
    await new Promise<void>((resolve) => socket.on("connect", () => resolve()));
    socket.write(Buffer.concat([HANDSHAKE, frame(req)]));
    await new Promise<void>((resolve) => {
      const check = () => {
        const buf = Buffer.concat(received);
        if (buf.length >= HANDSHAKE.length + 4) {
          const n = buf.readUInt32BE(HANDSHAKE.length);
          if (buf.length >= HANDSHAKE.length + 4 + n) return resolve();
        }
        setTimeout(check, 25);
      };
      check();
    });
    socket.end();
    const buf = Buffer.concat(received);
    expect(buf.subarray(0, HANDSHAKE.length).equals(HANDSHAKE)).toBe(true);
    const n = buf.readUInt32BE(HANDSHAKE.length);
    const img = decodePng(buf.subarray(HANDSHAKE.length + 4, HANDSHAKE.length + 4 + n));
    expect([img.width, img.height]).toEqual([256, 256]);
  }, 120_000);
});
