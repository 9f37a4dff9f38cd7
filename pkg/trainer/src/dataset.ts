// Manifest-driven access to (masked map, masked cost-to-go) PNG pairs.
import * as fs from "fs";
import * as path from "path";

import { RgbImage, decodePng } from "./png";

export interface PairEntry {
  input: string; // paths relative to the manifest directory
  target: string;
  world: string;
  mask: string;
  goal: [number, number];
}

export interface Manifest {
  dir: string;
  pairs: PairEntry[];
  renderSize: number;
}

export function loadManifest(manifestPath: string): Manifest {
  const raw = JSON.parse(fs.readFileSync(manifestPath, "utf8"));
  if (!Array.isArray(raw.pairs)) {
    throw new Error(`manifest ${manifestPath} has no pairs array`);
  }
  return {
    dir: path.dirname(manifestPath),
    pairs: raw.pairs as PairEntry[],
    renderSize: raw.render_size ?? 256,
  };
}

export function splitOf(pair: PairEntry): string {
  return pair.input.split("/")[0];
}

export function pairsForSplit(manifest: Manifest, split: string): PairEntry[] {
  return manifest.pairs.filter((p) => splitOf(p) === split);
}

// mask m000 is the fully observed map by dataset convention
export function isFullMap(pair: PairEntry): boolean {
  return pair.mask === "m000";
}

export interface LoadedPair {
  input: RgbImage;
  target: RgbImage;
}

export function loadPair(manifest: Manifest, pair: PairEntry, expectSize?: number): LoadedPair {
  const input = decodePng(fs.readFileSync(path.join(manifest.dir, pair.input)));
  const target = decodePng(fs.readFileSync(path.join(manifest.dir, pair.target)));
  for (const img of [input, target]) {
    if (expectSize && (img.width !== expectSize || img.height !== expectSize)) {
      throw new Error(
        `pair ${pair.input}: expected ${expectSize}x${expectSize} RGB, got ${img.width}x${img.height}`
      );
    }
  }
  return { input, target };
}

// deterministic shuffled index stream (mulberry32)
export function* shuffledIndices(n: number, seed: number): Generator<number> {
  let a = seed >>> 0;
  const rand = () => {
    a |= 0;
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
  while (true) {
    const order = Array.from({ length: n }, (_, i) => i);
    for (let i = n - 1; i > 0; i--) {
      const j = Math.floor(rand() * (i + 1));
      [order[i], order[j]] = [order[j], order[i]];
    }
    yield* order;
  }
}
