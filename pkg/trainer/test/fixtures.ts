// Synthetic manifest + pair fixtures: tiny suburban-ish 256x256 layouts with
// the same tri-modal target convention as the real dataset (gray ramp toward
// a goal, red off-path, black where masked).
import * as fs from "fs";
import * as path from "path";

import { RgbImage, encodePng } from "../src/png";

export const SIZE = 256;

function blank(): RgbImage {
  return { width: SIZE, height: SIZE, data: new Uint8Array(SIZE * SIZE * 3) };
}

function put(img: RgbImage, x: number, y: number, rgb: [number, number, number]) {
  const i = (y * SIZE + x) * 3;
  img.data[i] = rgb[0];
  img.data[i + 1] = rgb[1];
  img.data[i + 2] = rgb[2];
}

// door column varies per world; observed band height varies per mask
export function makePair(world: number, mask: number, maskedRows: number) {
  const input = blank();
  const target = blank();
  const door = 64 + (world * 48) % 128;
  for (let y = 0; y < SIZE; y++) {
    for (let x = 0; x < SIZE; x++) {
      const road = y >= SIZE - 32;
      const drive = x >= door && x < door + 16 && y >= 64 && y < SIZE - 32;
      if (road) put(input, x, y, [255, 215, 0]);
      else if (drive) put(input, x, y, [0, 0, 255]);
      else put(input, x, y, [34, 139, 34]);
      if (road || drive) {
        const d = Math.abs(x - door) + Math.abs(y - 64);
        const gray = Math.max(16, 255 - Math.floor(d / 2));
        put(target, x, y, [gray, gray, gray]);
      } else {
        put(target, x, y, [255, 0, 0]);
      }
    }
  }
  if (maskedRows > 0) {
    for (let y = 0; y < maskedRows; y++) {
      for (let x = 0; x < SIZE; x++) {
        put(input, x, y, [0, 0, 0]);
        put(target, x, y, [0, 0, 0]);
      }
    }
  }
  return { input, target };
}

export function writeFixtureDataset(dir: string, worlds = 2, masks = 2): string {
  const pairs = [];
  for (const split of ["train", "val", "test"]) {
    fs.mkdirSync(path.join(dir, split), { recursive: true });
  }
  const splitFor = (w: number) => (w === worlds - 1 && worlds > 2 ? "test" : w === worlds - 2 && worlds > 1 ? "val" : "train");
  for (let w = 0; w < worlds; w++) {
    for (let m = 0; m < masks; m++) {
      const split = splitFor(w);
      const pair = makePair(w, m, m === 0 ? 0 : 32 * m);
      const inputRel = `${split}/w${String(w).padStart(4, "0")}_m${String(m).padStart(3, "0")}_map.png`;
      const targetRel = inputRel.replace("_map.png", "_c2g.png");
      fs.writeFileSync(path.join(dir, inputRel), encodePng(pair.input));
      fs.writeFileSync(path.join(dir, targetRel), encodePng(pair.target));
      pairs.push({
        input: inputRel,
        target: targetRel,
        world: `w${String(w).padStart(4, "0")}`,
        mask: `m${String(m).padStart(3, "0")}`,
        goal: [64, 64 + (w * 48) % 128],
      });
    }
  }
  const manifestPath = path.join(dir, "manifest.json");
  fs.writeFileSync(manifestPath, JSON.stringify({ pairs, palette: "palette.json", render_size: SIZE }));
  return manifestPath;
}
