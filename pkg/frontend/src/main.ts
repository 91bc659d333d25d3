import { ApiError, VesselForgeClient } from "./api.js";
import { strokesToPngB64 } from "./raster.js";
import { CanvasState, provenanceDownload } from "./state.js";
import type { GalleryItem } from "./types.js";

const CANVAS_SIZE = 256;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function redraw(ctx: CanvasRenderingContext2D, state: CanvasState): void {
  ctx.fillStyle = "#000";
  ctx.fillRect(0, 0, state.width, state.height);
  ctx.strokeStyle = "#fff";
  ctx.lineCap = "round";
  ctx.lineJoin = "round";
  for (const stroke of state.strokes) {
    ctx.lineWidth = stroke.brushWidth;
    ctx.beginPath();
    const [first, ...rest] = stroke.points;
    ctx.moveTo(first.x, first.y);
    if (rest.length === 0) ctx.lineTo(first.x + 0.01, first.y);
    for (const p of rest) ctx.lineTo(p.x, p.y);
    ctx.stroke();
  }
}

function showImage(img: HTMLImageElement, b64: string): void {
  img.src = `data:image/png;base64,${b64}`;
  img.style.display = "block";
}

function setError(banner: HTMLElement, message: string | null): void {
  banner.textContent = message ?? "";
  banner.style.display = message ? "block" : "none";
}

export function boot(): void {
  const state = new CanvasState(CANVAS_SIZE, CANVAS_SIZE);
  const client = new VesselForgeClient("");

  const canvas = el<HTMLCanvasElement>("doodle-canvas");
  canvas.width = state.width;
  canvas.height = state.height;
  const ctx = canvas.getContext("2d");
  if (!ctx) throw new Error("2d canvas unsupported");

  const banner = el<HTMLDivElement>("error-banner");
  const forgeImg = el<HTMLImageElement>("forge-result");
  const srImg = el<HTMLImageElement>("sr-result");
  const brushInput = el<HTMLInputElement>("brush-width");
  const seedLabel = el<HTMLSpanElement>("seed-label");
  const gallery = el<HTMLDivElement>("gallery");

  let drawing = false;
  let lastForgeB64: string | null = null;

  const pointerPos = (ev: PointerEvent) => {
    const rect = canvas.getBoundingClientRect();
    return {
      x: ((ev.clientX - rect.left) / rect.width) * state.width,
      y: ((ev.clientY - rect.top) / rect.height) * state.height,
    };
  };

  canvas.addEventListener("pointerdown", (ev) => {
    drawing = true;
    canvas.setPointerCapture(ev.pointerId);
    state.beginStroke(pointerPos(ev), Number(brushInput.value));
    redraw(ctx, state);
  });
  canvas.addEventListener("pointermove", (ev) => {
    if (!drawing) return;
    state.extendStroke(pointerPos(ev));
    redraw(ctx, state);
  });
  canvas.addEventListener("pointerup", () => {
    drawing = false;
  });

  el<HTMLButtonElement>("undo-btn").addEventListener("click", () => {
    state.undo();
    redraw(ctx, state);
  });
  el<HTMLButtonElement>("clear-btn").addEventListener("click", () => {
    state.clear();
    redraw(ctx, state);
  });
  el<HTMLButtonElement>("reroll-btn").addEventListener("click", () => {
    seedLabel.textContent = String(state.rerollSeed());
  });

  const addToGallery = (item: GalleryItem) => {
    state.addGalleryItem(item);
    const cell = document.createElement("div");
    cell.className = "gallery-cell";
    const img = document.createElement("img");
    img.src = `data:image/png;base64,${item.forgeryB64}`;
    img.title = `seed ${item.provenance.seed}`;
    const link = document.createElement("a");
    link.textContent = "provenance";
    link.download = `forge-seed${item.provenance.seed}.json`;
    link.href = `data:application/json;charset=utf-8,${encodeURIComponent(provenanceDownload(item))}`;
    cell.append(img, link);
    gallery.prepend(cell);
  };

  el<HTMLButtonElement>("forge-btn").addEventListener("click", () => {
    if (state.isEmpty || state.pending) return;
    // Keep the drawing intact regardless of outcome; only the results
    // panel and error banner change on failure.
    const doodleB64 = strokesToPngB64(state.strokes, state.width, state.height);
    state.pending = true;
    setError(banner, null);
    client
      .forge(doodleB64, state.params)
      .then((result) => {
        state.lastError = null;
        lastForgeB64 = result.imageB64;
        showImage(forgeImg, result.imageB64);
        addToGallery({
          doodleB64,
          forgeryB64: result.imageB64,
          provenance: result.provenance,
        });
      })
      .catch((err: unknown) => {
        state.lastError = err instanceof ApiError ? err.message : String(err);
        setError(banner, state.lastError);
      })
      .finally(() => {
        state.pending = false;
      });
  });

  el<HTMLButtonElement>("superres-btn").addEventListener("click", () => {
    if (!lastForgeB64 || state.pending) return;
    state.pending = true;
    setError(banner, null);
    client
      .superres(lastForgeB64)
      .then((result) => {
        state.lastError = null;
        showImage(srImg, result.imageB64);
      })
      .catch((err: unknown) => {
        state.lastError = err instanceof ApiError ? err.message : String(err);
        setError(banner, state.lastError);
      })
      .finally(() => {
        state.pending = false;
      });
  });

  seedLabel.textContent = String(state.params.seed);
  redraw(ctx, state);

  client
    .health()
    .then((h) => {
      el<HTMLSpanElement>("health-label").textContent =
        `service ok (${Object.keys(h.models).join(", ")})`;
    })
    .catch(() => {
      el<HTMLSpanElement>("health-label").textContent = "service unreachable";
    });
}

if (typeof document !== "undefined" && document.getElementById("doodle-canvas")) {
  boot();
}
