import * as fs from "fs";
import * as os from "os";
import * as path from "path";

import * as tf from "@tensorflow/tfjs";
import { afterAll, describe, expect, it } from "vitest";

import { loadCheckpoint, saveCheckpoint } from "../src/checkpoint";
import { IMAGE_SIZE, buildDiscriminator, buildGenerator } from "../src/model";

const tmp = fs.mkdtempSync(path.join(os.tmpdir(), "dc2g-model-"));
afterAll(() => fs.rmSync(tmp, { recursive: true, force: true }));

describe("generator", () => {
  it("maps 256x256x3 to 256x256x3", () => {
    const model = buildGenerator({ ngf: 1, seed: 0 });
    const x = tf.zeros([1, IMAGE_SIZE, IMAGE_SIZE, 3]);
    const y = model.predict(x) as tf.Tensor4D;
    expect(y.shape).toEqual([1, IMAGE_SIZE, IMAGE_SIZE, 3]);
    const vals = y.dataSync();
    let lo = Infinity;
    let hi = -Infinity;
    for (let i = 0; i < vals.length; i++) {
      lo = Math.min(lo, vals[i]);
      hi = Math.max(hi, vals[i]);
    }
    expect(lo).toBeGreaterThanOrEqual(-1);
    expect(hi).toBeLessThanOrEqual(1);
    tf.dispose([x, y]);
  }, 120_000);

  it("inference is deterministic (dropout off at predict)", () => {
    const model = buildGenerator({ ngf: 1, seed: 3 });
    const x = tf.randomUniform([1, IMAGE_SIZE, IMAGE_SIZE, 3], -1, 1, "float32", 5);
    const a = (model.predict(x) as tf.Tensor).dataSync();
    const b = (model.predict(x) as tf.Tensor).dataSync();
    expect(Buffer.from(new Float32Array(a).buffer).equals(Buffer.from(new Float32Array(b).buffer))).toBe(true);
    x.dispose();
  }, 120_000);

  it("checkpoint save/load reproduces predictions exactly", async () => {
    const model = buildGenerator({ ngf: 1, seed: 9 });
    const dir = path.join(tmp, "ckpt");
    await saveCheckpoint(model, dir, { step: 0, config: { ngf: 1, seed: 9 } });
    const { model: reloaded, meta } = await loadCheckpoint(dir);
    expect(meta.step).toBe(0);
    const x = tf.randomUniform([1, IMAGE_SIZE, IMAGE_SIZE, 3], -1, 1, "float32", 11);
    const a = (model.predict(x) as tf.Tensor).dataSync();
    const b = (reloaded.predict(x) as tf.Tensor).dataSync();
    expect(Buffer.from(new Float32Array(a).buffer).equals(Buffer.from(new Float32Array(b).buffer))).toBe(true);
    x.dispose();
  }, 120_000);
});

describe("discriminator", () => {
  it("produces a patch grid over stacked input/output images", () => {
    const model = buildDiscriminator({ ngf: 1, seed: 0 });
    const x = tf.zeros([1, IMAGE_SIZE, IMAGE_SIZE, 6]);
    const y = model.predict(x) as tf.Tensor4D;
    expect(y.shape[0]).toBe(1);
    expect(y.shape[3]).toBe(1);
    expect(y.shape[1]).toBeGreaterThan(1); // patch decisions, not a single logit
    tf.dispose([x, y]);
  }, 120_000);
});
