// Verbs: train, predict, serve, eval. Flags are --key value pairs.
import * as fs from "fs";

import { loadCheckpoint } from "./checkpoint";
import { isFullMap, loadManifest, loadPair, pairsForSplit } from "./dataset";
import { ModelEstimator, ProtocolError, serveStdio, serveTcp } from "./bridge";
import { classifyPixels, pixelL1, precisionRecall } from "./metrics";
import { IMAGE_SIZE } from "./model";
import { decodePng, imageToTensor, tensorToImage, encodePng } from "./png";
import { DEFAULT_TRAIN, LossKind, TrainConfig, train } from "./train";
import * as tf from "@tensorflow/tfjs";

function parseFlags(argv: string[]): Map<string, string> {
  const flags = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    if (!argv[i].startsWith("--") || i + 1 >= argv.length) {
      throw new Error(`expected --key value pairs, got ${argv.slice(i).join(" ")}`);
    }
    flags.set(argv[i].slice(2), argv[i + 1]);
  }
  return flags;
}

function need(flags: Map<string, string>, key: string): string {
  const value = flags.get(key);
  if (value === undefined) throw new Error(`missing required flag --${key}`);
  return value;
}

async function cmdTrain(flags: Map<string, string>) {
  const manifestPath = need(flags, "manifest");
  const cfg: TrainConfig = {
    ...DEFAULT_TRAIN,
    manifestPath,
    out: need(flags, "out"),
    loss: (flags.get("loss") ?? DEFAULT_TRAIN.loss) as LossKind,
    lambda: Number(flags.get("lambda") ?? DEFAULT_TRAIN.lambda),
    steps: Number(flags.get("steps") ?? DEFAULT_TRAIN.steps),
    batchSize: Number(flags.get("batch") ?? DEFAULT_TRAIN.batchSize),
    seed: Number(flags.get("seed") ?? DEFAULT_TRAIN.seed),
    ngf: Number(flags.get("ngf") ?? DEFAULT_TRAIN.ngf),
    valInterval: Number(flags.get("val-interval") ?? DEFAULT_TRAIN.valInterval),
    valPairs: Number(flags.get("val-pairs") ?? DEFAULT_TRAIN.valPairs),
    logEvery: Number(flags.get("log-every") ?? DEFAULT_TRAIN.logEvery),
  };
  if (!["l1", "gan", "l1+gan"].includes(cfg.loss)) throw new Error(`unknown loss ${cfg.loss}`);
  const manifest = loadManifest(manifestPath);
  const history = await train(manifest, cfg);
  const last = history[history.length - 1];
  process.stderr.write(`checkpoint written to ${cfg.out} (final loss ${last?.trainLoss.toFixed(4)})\n`);
}

async function cmdPredict(flags: Map<string, string>) {
  const { model } = await loadCheckpoint(need(flags, "checkpoint"));
  const img = decodePng(fs.readFileSync(need(flags, "input")));
  if (img.width !== IMAGE_SIZE || img.height !== IMAGE_SIZE) {
    throw new Error(`input must be ${IMAGE_SIZE}x${IMAGE_SIZE} RGB, got ${img.width}x${img.height}`);
  }
  const out = tf.tidy(() => (model.predict(imageToTensor(img).expandDims(0)) as tf.Tensor4D).squeeze([0]));
  fs.writeFileSync(need(flags, "output"), encodePng(tensorToImage(out as tf.Tensor3D)));
  out.dispose();
}

async function cmdServe(flags: Map<string, string>) {
  const { model } = await loadCheckpoint(need(flags, "checkpoint"));
  const estimator = new ModelEstimator(model);
  const spec = process.env.DC2G_BRIDGE ?? "stdio";
  if (spec === "stdio") {
    await serveStdio(estimator);
    return;
  }
  if (spec.startsWith("tcp:")) {
    const [, host, port] = spec.split(":");
    const connections = flags.has("connections") ? Number(flags.get("connections")) : undefined;
    const server = await serveTcp(estimator, host, Number(port), connections);
    await new Promise<void>((resolve) => server.on("close", resolve));
    return;
  }
  throw new Error(`unrecognized DC2G_BRIDGE value ${spec}`);
}

async function cmdEval(flags: Map<string, string>) {
  const { model } = await loadCheckpoint(need(flags, "checkpoint"));
  const manifest = loadManifest(need(flags, "manifest"));
  const split = flags.get("split") ?? "test";
  const fullOnly = (flags.get("full-only") ?? "true") === "true";
  let pairs = pairsForSplit(manifest, split);
  if (fullOnly) pairs = pairs.filter(isFullMap);
  if (pairs.length === 0) throw new Error(`no ${fullOnly ? "full-map " : ""}pairs in split ${split}`);
  const rows = [];
  for (const entry of pairs) {
    const pair = loadPair(manifest, entry, IMAGE_SIZE);
    const out = tf.tidy(() =>
      (model.predict(imageToTensor(pair.input).expandDims(0)) as tf.Tensor4D).squeeze([0])
    );
    const pred = tensorToImage(out as tf.Tensor3D);
    out.dispose();
    const trav = precisionRecall(classifyPixels(pred, "traversable"), classifyPixels(pair.target, "traversable"));
    const low = precisionRecall(classifyPixels(pred, "low_c2g"), classifyPixels(pair.target, "low_c2g"));
    rows.push({
      pair: entry.input,
      l1: pixelL1(pred, pair.target),
      traversable: trav,
      low_c2g: low,
    });
  }
  const mean = (xs: (number | null)[]) => {
    const vals = xs.filter((x): x is number => x !== null);
    return vals.length ? vals.reduce((a, b) => a + b, 0) / vals.length : null;
  };
  const report = {
    split,
    pairs: rows.length,
    mean_l1: mean(rows.map((r) => r.l1)),
    max_l1: Math.max(...rows.map((r) => r.l1)),
    traversable_precision: mean(rows.map((r) => r.traversable.precision)),
    traversable_recall: mean(rows.map((r) => r.traversable.recall)),
    low_c2g_precision: mean(rows.map((r) => r.low_c2g.precision)),
    low_c2g_recall: mean(rows.map((r) => r.low_c2g.recall)),
    // release targets for a fully trained model
    targets: { max_l1: 0.15, traversable_precision: 0.9, traversable_recall: 0.75 },
    rows,
  };
  const outPath = flags.get("out");
  const text = JSON.stringify(report, null, 2);
  if (outPath) fs.writeFileSync(outPath, text);
  process.stdout.write(text + "\n");
}

export async function main(argv: string[]): Promise<void> {
  const [verb, ...rest] = argv;
  const flags = parseFlags(rest);
  if (verb === "train") return cmdTrain(flags);
  if (verb === "predict") return cmdPredict(flags);
  if (verb === "serve") return cmdServe(flags);
  if (verb === "eval") return cmdEval(flags);
  throw new Error(`usage: cli.js train|predict|serve|eval --key value ...`);
}

if (require.main === module) {
  main(process.argv.slice(2)).catch((err) => {
    const quiet = err instanceof ProtocolError;
    process.stderr.write(`${quiet ? "protocol error" : "error"}: ${err.message}\n`);
    process.exit(1);
  });
}
