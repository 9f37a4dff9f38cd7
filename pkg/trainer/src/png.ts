// RGB PNG <-> raw buffers / tensors. All images are 8-bit RGB; the alpha
// channel pngjs adds internally is stripped on decode and forced opaque on
// encode.
import { PNG } from "pngjs";
import * as tf from "@tensorflow/tfjs";

export interface RgbImage {
  width: number;
  height: number;
  data: Uint8Array; // length = width * height * 3, row-major
}

export function decodePng(bytes: Buffer): RgbImage {
  const png = PNG.sync.read(bytes);
  const n = png.width * png.height;
  const rgb = new Uint8Array(n * 3);
  for (let i = 0; i < n; i++) {
    rgb[i * 3] = png.data[i * 4];
    rgb[i * 3 + 1] = png.data[i * 4 + 1];
    rgb[i * 3 + 2] = png.data[i * 4 + 2];
  }
  return { width: png.width, height: png.height, data: rgb };
}

export function encodePng(img: RgbImage): Buffer {
  const png = new PNG({ width: img.width, height: img.height });
  const n = img.width * img.height;
  for (let i = 0; i < n; i++) {
    png.data[i * 4] = img.data[i * 3];
    png.data[i * 4 + 1] = img.data[i * 3 + 1];
    png.data[i * 4 + 2] = img.data[i * 3 + 2];
    png.data[i * 4 + 3] = 255;
  }
  // colorType 2 = true-color without alpha; the bridge protocol carries RGB
  return PNG.sync.write(png, { colorType: 2 });
}

// [0,255] -> [-1,1] float tensor of shape [h, w, 3]
export function imageToTensor(img: RgbImage): tf.Tensor3D {
  const floats = new Float32Array(img.data.length);
  for (let i = 0; i < img.data.length; i++) floats[i] = img.data[i] / 127.5 - 1;
  return tf.tensor3d(floats, [img.height, img.width, 3]);
}

// [-1,1] float tensor -> clipped [0,255] bytes
export function tensorToImage(t: tf.Tensor3D): RgbImage {
  const [h, w] = t.shape;
  const vals = t.dataSync();
  const data = new Uint8Array(vals.length);
  for (let i = 0; i < vals.length; i++) {
    data[i] = Math.max(0, Math.min(255, Math.round((vals[i] + 1) * 127.5)));
  }
  return { width: w, height: h, data };
}
