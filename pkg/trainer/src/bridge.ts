// Bridge server: handshake "DC2G/1 256 256\n" both ways, then alternating
// [u32 big-endian length][PNG bytes] frames, one response per request, in
// order. Any protocol violation aborts without writing a response.
import * as net from "net";
import { Readable, Writable } from "stream";
import * as tf from "@tensorflow/tfjs";

import { IMAGE_SIZE } from "./model";
import { decodePng, encodePng, imageToTensor, tensorToImage } from "./png";

export const HANDSHAKE = Buffer.from("DC2G/1 256 256\n", "ascii");
export const MAX_FRAME = 1 << 26;

export class ProtocolError extends Error {}

export interface Estimator {
  estimate(png: Buffer): Buffer;
}

export class ModelEstimator implements Estimator {
  constructor(private model: tf.LayersModel) {}

  estimate(png: Buffer): Buffer {
    const img = decodePng(png);
    if (img.width !== IMAGE_SIZE || img.height !== IMAGE_SIZE) {
      throw new ProtocolError(`expected ${IMAGE_SIZE}x${IMAGE_SIZE} request, got ${img.width}x${img.height}`);
    }
    const out = tf.tidy(() => {
      const x = imageToTensor(img).expandDims(0);
      return (this.model.predict(x) as tf.Tensor4D).squeeze([0]) as tf.Tensor3D;
    });
    const result = encodePng(tensorToImage(out));
    out.dispose();
    return result;
  }
}

// Incremental reader over a stream: resolves exact byte counts in arrival order.
class StreamReader {
  private chunks: Buffer = Buffer.alloc(0);
  private waiting: { n: number; resolve: (b: Buffer | null) => void }[] = [];
  private ended = false;

  constructor(stream: Readable) {
    stream.on("data", (chunk: Buffer) => {
      this.chunks = Buffer.concat([this.chunks, chunk]);
      this.pump();
    });
    stream.on("end", () => {
      this.ended = true;
      this.pump();
    });
    stream.on("error", () => {
      this.ended = true;
      this.pump();
    });
  }

  private pump() {
    while (this.waiting.length > 0) {
      const head = this.waiting[0];
      if (this.chunks.length >= head.n) {
        const out = this.chunks.subarray(0, head.n);
        this.chunks = this.chunks.subarray(head.n);
        this.waiting.shift();
        head.resolve(Buffer.from(out));
      } else if (this.ended) {
        this.waiting.shift();
        head.resolve(this.chunks.length === 0 && head.n > 0 ? null : Buffer.from(this.chunks));
      } else {
        break;
      }
    }
  }

  // null means clean EOF with zero bytes available
  read(n: number): Promise<Buffer | null> {
    return new Promise((resolve) => {
      this.waiting.push({ n, resolve });
      this.pump();
    });
  }
}

export async function serveConnection(estimator: Estimator, input: Readable, output: Writable): Promise<number> {
  output.write(HANDSHAKE);
  const reader = new StreamReader(input);
  const peer = await reader.read(HANDSHAKE.length);
  if (peer === null || !peer.equals(HANDSHAKE)) {
    throw new ProtocolError(`bad handshake ${peer === null ? "<eof>" : JSON.stringify(peer.toString("ascii"))}`);
  }
  let served = 0;
  for (;;) {
    const head = await reader.read(4);
    if (head === null) return served; // clean EOF between frames
    if (head.length !== 4) throw new ProtocolError("stream ended inside a frame header");
    const length = head.readUInt32BE(0);
    if (length === 0) throw new ProtocolError("zero-length frame");
    if (length > MAX_FRAME) throw new ProtocolError(`frame of ${length} bytes exceeds cap`);
    const payload = await reader.read(length);
    if (payload === null || payload.length !== length) {
      throw new ProtocolError("stream ended inside a frame payload");
    }
    const response = estimator.estimate(payload);
    const frame = Buffer.alloc(4);
    frame.writeUInt32BE(response.length, 0);
    output.write(frame);
    output.write(response);
    served++;
  }
}

export async function serveStdio(estimator: Estimator): Promise<number> {
  return serveConnection(estimator, process.stdin, process.stdout);
}

export async function serveTcp(
  estimator: Estimator,
  host: string,
  port: number,
  connections?: number
): Promise<net.Server> {
  const server = net.createServer();
  let served = 0;
  server.on("connection", async (socket) => {
    try {
      await serveConnection(estimator, socket, socket);
      socket.end();
    } catch (err) {
      socket.destroy();
      server.close();
      throw err;
    }
    served++;
    if (connections !== undefined && served >= connections) server.close();
  });
  await new Promise<void>((resolve) => server.listen(port, host, resolve));
  return server;
}
