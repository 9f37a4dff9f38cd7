// Evaluation metrics compatible with the planner toolkit's scoring path:
// per-pixel L1, and precision/recall of HSV-thresholded pixel classes.
import { RgbImage } from "./png";

export function pixelL1(a: RgbImage, b: RgbImage): number {
  if (a.width !== b.width || a.height !== b.height) {
    throw new Error(`image dims differ: ${a.width}x${a.height} vs ${b.width}x${b.height}`);
  }
  let total = 0;
  for (let i = 0; i < a.data.length; i++) total += Math.abs(a.data[i] - b.data[i]);
  return total / a.data.length / 255;
}

function satVal(r: number, g: number, b: number): [number, number] {
  const mx = Math.max(r, g, b) / 255;
  const mn = Math.min(r, g, b) / 255;
  return [mx > 0 ? (mx - mn) / mx : 0, mx];
}

export type PixelTask = "traversable" | "low_c2g";

export function classifyPixels(img: RgbImage, task: PixelTask): Uint8Array {
  const n = img.width * img.height;
  const out = new Uint8Array(n);
  for (let i = 0; i < n; i++) {
    const [s, v] = satVal(img.data[i * 3], img.data[i * 3 + 1], img.data[i * 3 + 2]);
    out[i] = task === "traversable" ? (s < 0.3 ? 1 : 0) : (v > 0.9 && s < 0.3 ? 1 : 0);
  }
  return out;
}

export interface PrecisionRecall {
  precision: number | null;
  recall: number | null;
}

export function precisionRecall(pred: Uint8Array, truth: Uint8Array): PrecisionRecall {
  let tp = 0;
  let fp = 0;
  let fn = 0;
  for (let i = 0; i < pred.length; i++) {
    if (pred[i] && truth[i]) tp++;
    else if (pred[i]) fp++;
    else if (truth[i]) fn++;
  }
  return {
    precision: tp + fp > 0 ? tp / (tp + fp) : null,
    recall: tp + fn > 0 ? tp / (tp + fn) : null,
  };
}
