// Checkpoint directory layout: model.json (topology + weight specs),
// weights.bin, and config.json echoing the training configuration. The
// custom IO handlers keep this runnable on the pure-JS tfjs backend.
import * as fs from "fs";
import * as path from "path";
import * as tf from "@tensorflow/tfjs";

export interface CheckpointMeta {
  config: Record<string, unknown>;
  step: number;
}

export async function saveCheckpoint(model: tf.LayersModel, dir: string, meta: CheckpointMeta): Promise<void> {
  fs.mkdirSync(dir, { recursive: true });
  await model.save(
    tf.io.withSaveHandler(async (artifacts) => {
      fs.writeFileSync(
        path.join(dir, "model.json"),
        JSON.stringify({
          modelTopology: artifacts.modelTopology,
          weightSpecs: artifacts.weightSpecs,
          format: artifacts.format,
          generatedBy: artifacts.generatedBy,
          convertedBy: artifacts.convertedBy ?? null,
        })
      );
      const weights = artifacts.weightData as ArrayBuffer;
      fs.writeFileSync(path.join(dir, "weights.bin"), Buffer.from(weights));
      return {
        modelArtifactsInfo: {
          dateSaved: new Date(),
          modelTopologyType: "JSON",
        },
      };
    })
  );
  fs.writeFileSync(path.join(dir, "config.json"), JSON.stringify(meta, null, 2));
}

export async function loadCheckpoint(dir: string): Promise<{ model: tf.LayersModel; meta: CheckpointMeta }> {
  const spec = JSON.parse(fs.readFileSync(path.join(dir, "model.json"), "utf8"));
  const weightData = fs.readFileSync(path.join(dir, "weights.bin"));
  const model = await tf.loadLayersModel(
    tf.io.fromMemory({
      modelTopology: spec.modelTopology,
      weightSpecs: spec.weightSpecs,
      weightData: weightData.buffer.slice(weightData.byteOffset, weightData.byteOffset + weightData.byteLength),
    })
  );
  const meta = JSON.parse(fs.readFileSync(path.join(dir, "config.json"), "utf8")) as CheckpointMeta;
  return { model, meta };
}
