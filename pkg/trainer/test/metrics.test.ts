import { describe, expect, it } from "vitest";

import { classifyPixels, pixelL1, precisionRecall } from "../src/metrics";
import { RgbImage } from "../src/png";

function uniform(w: number, h: number, rgb: [number, number, number]): RgbImage {
  const data = new Uint8Array(w * h * 3);
  for (let i = 0; i < w * h; i++) data.set(rgb, i * 3);
  return { width: w, height: h, data };
}

describe("metrics", () => {
  it("pixel L1 endpoints", () => {
    const black = uniform(4, 4, [0, 0, 0]);
    const white = uniform(4, 4, [255, 255, 255]);
    expect(pixelL1(black, black)).toBe(0);
    expect(pixelL1(black, white)).toBe(1);
  });

  it("pixel L1 single-channel difference", () => {
    const a = uniform(16, 16, [0, 0, 0]);
    const b = uniform(16, 16, [0, 0, 0]);
    b.data[0] = 255;
    expect(pixelL1(a, b)).toBeCloseTo(255 / (255 * 16 * 16 * 3), 12);
  });

  it("classification thresholds match the planner's HSV rules", () => {
    const red = uniform(2, 2, [255, 0, 0]);
    const bright = uniform(2, 2, [250, 250, 250]);
    const mid = uniform(2, 2, [128, 128, 128]);
    expect(Array.from(classifyPixels(red, "traversable"))).toEqual([0, 0, 0, 0]);
    expect(Array.from(classifyPixels(bright, "traversable"))).toEqual([1, 1, 1, 1]);
    expect(Array.from(classifyPixels(bright, "low_c2g"))).toEqual([1, 1, 1, 1]);
    expect(Array.from(classifyPixels(mid, "traversable"))).toEqual([1, 1, 1, 1]);
    expect(Array.from(classifyPixels(mid, "low_c2g"))).toEqual([0, 0, 0, 0]);
  });

  it("precision/recall hand-counted", () => {
    const pred = Uint8Array.from([1, 1, 0, 0]);
    const truth = Uint8Array.from([0, 1, 1, 0]);
    const { precision, recall } = precisionRecall(pred, truth);
    expect(precision).toBeCloseTo(0.5);
    expect(recall).toBeCloseTo(0.5);
    const empty = precisionRecall(Uint8Array.from([0, 0]), Uint8Array.from([1, 0]));
    expect(empty.precision).toBeNull();
    expect(empty.recall).toBe(0);
  });
});
