import type { ForgeParams, GalleryItem, Point, Stroke } from "./types.js";

/**
 * Drawing and session state, kept free of DOM so it is unit-testable.
 * Canvas dims must stay divisible by the service's magnification N.
 */
export class CanvasState {
  readonly width: number;
  readonly height: number;
  strokes: Stroke[] = [];
  params: ForgeParams;
  gallery: GalleryItem[] = [];
  pending = false;
  lastError: string | null = null;

  constructor(width = 256, height = 256, params?: Partial<ForgeParams>) {
    this.width = width;
    this.height = height;
    this.params = {
      seed: 0,
      density: 0.05,
      streakLen: 4,
      blurSigma: 1.0,
      ...params,
    };
  }

  beginStroke(p: Point, brushWidth: number): void {
    this.strokes.push({ points: [p], brushWidth });
  }

  extendStroke(p: Point): void {
    const current = this.strokes[this.strokes.length - 1];
    if (current) current.points.push(p);
  }

  undo(): boolean {
    return this.strokes.pop() !== undefined;
  }

  clear(): void {
    this.strokes = [];
  }

  get isEmpty(): boolean {
    return this.strokes.length === 0;
  }

  rerollSeed(): number {
    this.params.seed += 1;
    return this.params.seed;
  }

  addGalleryItem(item: GalleryItem): void {
    this.gallery.push(item);
  }

  /** Snapshot for failure recovery: a failed request must not lose strokes. */
  snapshotStrokes(): Stroke[] {
    return this.strokes.map((s) => ({
      brushWidth: s.brushWidth,
      points: s.points.map((p) => ({ ...p })),
    }));
  }
}

/** Provenance sidecar content for exact CLI reproduction of a forgery. */
export function provenanceDownload(item: GalleryItem): string {
  return JSON.stringify(
    {
      command: "forge",
      provenance: item.provenance,
      note: "reproduce with: vesselforge forge --doodle <raster.png> " +
        `--seed ${item.provenance.seed} --density ${item.provenance.density} ` +
        `--streak-len ${item.provenance.streak_len} --blur-sigma ${item.provenance.blur_sigma}`,
    },
    null,
    2,
  );
}
