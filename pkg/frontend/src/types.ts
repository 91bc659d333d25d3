export interface Point {
  x: number;
  y: number;
}

export interface Stroke {
  points: Point[];
  brushWidth: number;
}

export interface ForgeParams {
  seed: number;
  density: number;
  streakLen: number;
  blurSigma: number;
}

export interface Provenance {
  seed: number;
  density: number;
  streak_len: number;
  blur_sigma: number;
  n: number;
  schedule_t: number;
  generator: string;
}

export interface ForgeResult {
  imageB64: string;
  provenance: Provenance;
}

export interface GalleryItem {
  doodleB64: string;
  forgeryB64: string;
  provenance: Provenance;
}
