// Encoder-decoder generator with skip connections (U-Net) at 256x256, and a
// patch discriminator for the adversarial loss option. Channel widths scale
// with ngf; every initializer is seeded so builds are reproducible.
import * as tf from "@tensorflow/tfjs";

export const IMAGE_SIZE = 256;
export const DOWN_FACTORS = [1, 2, 4, 8, 8, 8, 8, 8]; // 8 encoder stages: 256 -> 1

export interface ModelConfig {
  ngf: number;
  seed: number;
}

function init(seed: number) {
  return tf.initializers.randomNormal({ mean: 0, stddev: 0.02, seed });
}

export function buildGenerator(cfg: ModelConfig): tf.LayersModel {
  let seed = cfg.seed;
  const nextInit = () => init(seed++);
  const input = tf.input({ shape: [IMAGE_SIZE, IMAGE_SIZE, 3] });

  const skips: tf.SymbolicTensor[] = [];
  let x: tf.SymbolicTensor = input;
  DOWN_FACTORS.forEach((mult, i) => {
    x = tf.layers
      .conv2d({
        filters: cfg.ngf * mult,
        kernelSize: 4,
        strides: 2,
        padding: "same",
        useBias: i === 0,
        kernelInitializer: nextInit(),
      })
      .apply(x) as tf.SymbolicTensor;
    if (i > 0) {
      x = tf.layers.batchNormalization().apply(x) as tf.SymbolicTensor;
    }
    x = tf.layers.leakyReLU({ alpha: 0.2 }).apply(x) as tf.SymbolicTensor;
    skips.push(x);
  });

  const upFactors = DOWN_FACTORS.slice(0, -1).reverse(); // 7 ups with skips, then the output layer
  upFactors.forEach((mult, i) => {
    x = tf.layers
      .conv2dTranspose({
        filters: cfg.ngf * mult,
        kernelSize: 4,
        strides: 2,
        padding: "same",
        useBias: false,
        kernelInitializer: nextInit(),
      })
      .apply(x) as tf.SymbolicTensor;
    x = tf.layers.batchNormalization().apply(x) as tf.SymbolicTensor;
    if (i < 3) {
      x = tf.layers.dropout({ rate: 0.5, seed: cfg.seed + 1000 + i }).apply(x) as tf.SymbolicTensor;
    }
    x = tf.layers.reLU().apply(x) as tf.SymbolicTensor;
    const skip = skips[skips.length - 2 - i];
    x = tf.layers.concatenate().apply([x, skip]) as tf.SymbolicTensor;
  });

  const out = tf.layers
    .conv2dTranspose({
      filters: 3,
      kernelSize: 4,
      strides: 2,
      padding: "same",
      activation: "tanh",
      kernelInitializer: nextInit(),
    })
    .apply(x) as tf.SymbolicTensor;
  return tf.model({ inputs: input, outputs: out, name: "c2g_generator" });
}

// 70x70-receptive-field patch classifier on (input, candidate) stacks.
export function buildDiscriminator(cfg: ModelConfig): tf.LayersModel {
  let seed = cfg.seed + 5000;
  const nextInit = () => init(seed++);
  const input = tf.input({ shape: [IMAGE_SIZE, IMAGE_SIZE, 6] });
  let x: tf.SymbolicTensor = input;
  [1, 2, 4].forEach((mult, i) => {
    x = tf.layers
      .conv2d({
        filters: cfg.ngf * mult,
        kernelSize: 4,
        strides: 2,
        padding: "same",
        useBias: i === 0,
        kernelInitializer: nextInit(),
      })
      .apply(x) as tf.SymbolicTensor;
    if (i > 0) x = tf.layers.batchNormalization().apply(x) as tf.SymbolicTensor;
    x = tf.layers.leakyReLU({ alpha: 0.2 }).apply(x) as tf.SymbolicTensor;
  });
  x = tf.layers
    .conv2d({ filters: cfg.ngf * 8, kernelSize: 4, strides: 1, padding: "same", kernelInitializer: nextInit() })
    .apply(x) as tf.SymbolicTensor;
  x = tf.layers.batchNormalization().apply(x) as tf.SymbolicTensor;
  x = tf.layers.leakyReLU({ alpha: 0.2 }).apply(x) as tf.SymbolicTensor;
  const out = tf.layers
    .conv2d({ filters: 1, kernelSize: 4, strides: 1, padding: "same", kernelInitializer: nextInit() })
    .apply(x) as tf.SymbolicTensor;
  return tf.model({ inputs: input, outputs: out, name: "c2g_discriminator" });
}
