// Training loop for the cost-to-go translator: pixel L1 loss by default,
// optional adversarial loss or a weighted sum of the two.
import * as tf from "@tensorflow/tfjs";

import { saveCheckpoint } from "./checkpoint";
import { Manifest, loadPair, pairsForSplit, shuffledIndices } from "./dataset";
import { IMAGE_SIZE, buildDiscriminator, buildGenerator } from "./model";
import { imageToTensor } from "./png";

export type LossKind = "l1" | "gan" | "l1+gan";

export interface TrainConfig {
  manifestPath: string;
  out: string;
  loss: LossKind;
  lambda: number; // L1 weight in the combined loss
  steps: number;
  batchSize: number;
  seed: number;
  ngf: number;
  valInterval: number;
  valPairs: number;
  logEvery: number;
}

export const DEFAULT_TRAIN: Omit<TrainConfig, "manifestPath" | "out"> = {
  loss: "l1",
  lambda: 100,
  steps: 20000,
  batchSize: 1,
  seed: 0,
  ngf: 64,
  valInterval: 500,
  valPairs: 8,
  logEvery: 100,
};

export interface TrainHistory {
  step: number;
  trainLoss: number;
  valL1: number | null;
}

function batchTensor(manifest: Manifest, pairs: { input: any; target: any }[], idx: number[]): [tf.Tensor4D, tf.Tensor4D] {
  const inputs: tf.Tensor3D[] = [];
  const targets: tf.Tensor3D[] = [];
  for (const i of idx) {
    const pair = loadPair(manifest, (pairs as any)[i], IMAGE_SIZE);
    inputs.push(imageToTensor(pair.input));
    targets.push(imageToTensor(pair.target));
  }
  const x = tf.stack(inputs) as tf.Tensor4D;
  const y = tf.stack(targets) as tf.Tensor4D;
  inputs.forEach((t) => t.dispose());
  targets.forEach((t) => t.dispose());
  return [x, y];
}

export async function train(manifest: Manifest, cfg: TrainConfig): Promise<TrainHistory[]> {
  if (cfg.lambda <= 0 && cfg.loss === "l1+gan") {
    throw new Error("combined loss needs lambda > 0");
  }
  const trainPairs = pairsForSplit(manifest, "train");
  if (trainPairs.length === 0) throw new Error("manifest has no train pairs");
  // fail fast on shape problems before the loop
  loadPair(manifest, trainPairs[0], IMAGE_SIZE);

  const valPairs = pairsForSplit(manifest, "val").slice(0, cfg.valPairs);
  const generator = buildGenerator({ ngf: cfg.ngf, seed: cfg.seed });
  const gOpt = tf.train.adam(2e-4, 0.5);
  const useGan = cfg.loss !== "l1";
  const discriminator = useGan ? buildDiscriminator({ ngf: cfg.ngf, seed: cfg.seed }) : null;
  const dOpt = useGan ? tf.train.adam(2e-4, 0.5) : null;

  const order = shuffledIndices(trainPairs.length, cfg.seed);
  const history: TrainHistory[] = [];
  for (let step = 1; step <= cfg.steps; step++) {
    const idx = Array.from({ length: cfg.batchSize }, () => order.next().value as number);
    const [x, y] = batchTensor(manifest, trainPairs, idx);

    if (useGan && discriminator && dOpt) {
      dOpt.minimize(() => {
        return tf.tidy(() => {
          const fake = generator.apply(x, { training: true }) as tf.Tensor4D;
          const realLogits = discriminator.apply(tf.concat([x, y], 3), { training: true }) as tf.Tensor;
          const fakeLogits = discriminator.apply(tf.concat([x, fake], 3), { training: true }) as tf.Tensor;
          const realLoss = tf.losses.sigmoidCrossEntropy(tf.onesLike(realLogits), realLogits);
          const fakeLoss = tf.losses.sigmoidCrossEntropy(tf.zerosLike(fakeLogits), fakeLogits);
          return realLoss.add(fakeLoss).mul(0.5) as tf.Scalar;
        });
      }, false, discriminator.trainableWeights.map((w) => (w as any).val as tf.Variable));
    }

    const lossValue = gOpt.minimize(
      () => {
        return tf.tidy(() => {
          const fake = generator.apply(x, { training: true }) as tf.Tensor4D;
          const l1 = tf.losses.absoluteDifference(y, fake) as tf.Scalar;
          if (!useGan || !discriminator) return l1;
          const fakeLogits = discriminator.apply(tf.concat([x, fake], 3), { training: true }) as tf.Tensor;
          const adv = tf.losses.sigmoidCrossEntropy(tf.onesLike(fakeLogits), fakeLogits) as tf.Scalar;
          return cfg.loss === "gan" ? adv : adv.add(l1.mul(cfg.lambda));
        });
      },
      true,
      generator.trainableWeights.map((w) => (w as any).val as tf.Variable)
    ) as tf.Scalar;

    const trainLoss = lossValue.dataSync()[0];
    lossValue.dispose();
    x.dispose();
    y.dispose();

    const due = step % cfg.valInterval === 0 || step === cfg.steps;
    if (due || step % cfg.logEvery === 0) {
      const valL1 = due && valPairs.length > 0 ? validationL1(generator, manifest, valPairs) : null;
      history.push({ step, trainLoss, valL1 });
      const valText = valL1 === null ? "" : ` val_l1=${valL1.toFixed(4)}`;
      process.stderr.write(`step ${step}/${cfg.steps} loss=${trainLoss.toFixed(4)}${valText}\n`);
    }
  }

  await saveCheckpoint(generator, cfg.out, {
    step: cfg.steps,
    config: {
      loss: cfg.loss,
      lambda: cfg.lambda,
      steps: cfg.steps,
      batchSize: cfg.batchSize,
      seed: cfg.seed,
      ngf: cfg.ngf,
      imageSize: IMAGE_SIZE,
      manifest: cfg.manifestPath,
    },
  });
  return history;
}

// mean |pred - target| / 255 over pixels and channels, in [0, 1]
export function validationL1(generator: tf.LayersModel, manifest: Manifest, pairs: any[]): number {
  let total = 0;
  for (const entry of pairs) {
    const pair = loadPair(manifest, entry, IMAGE_SIZE);
    const l1 = tf.tidy(() => {
      const x = imageToTensor(pair.input).expandDims(0);
      const y = imageToTensor(pair.target).expandDims(0);
      const pred = generator.predict(x) as tf.Tensor4D;
      // tensors live in [-1,1]: |a-b| there is 2/255 per intensity level
      return tf.mean(tf.abs(pred.sub(y))).mul(0.5);
    });
    total += l1.dataSync()[0];
    l1.dispose();
  }
  return total / pairs.length;
}
