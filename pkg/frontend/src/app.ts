// Browser entry point: wires the DOM to a SessionStore. Drawing happens in
// canvas coordinates; clicks are mapped back to image pixels before any
// mutation is sent, so the server only ever sees image-space geometry.

import { Client } from "./api.js";
import { SessionStore } from "./state.js";
import { boxSizeLabel, headline, missingLabel, timingLabel } from "./format.js";
import {
  fitTransform,
  gridPolygon,
  nearestContactPoint,
  pathPolyline,
  toCanvas,
  toImage,
  uncertaintyBox,
} from "./geometry.js";
import type { PixelPoint } from "./types.js";

type Tool = "select" | "point" | "corner";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing element #${id}`);
  return node as T;
}

function report(e: unknown): void {
  el<HTMLElement>("status").textContent = e instanceof Error ? e.message : String(e);
}

function main(): void {
  const client = new Client("");
  const store = new SessionStore(client);

  const canvas = el<HTMLCanvasElement>("viewer");
  const ctx = canvas.getContext("2d")!;
  const frameLabel = el<HTMLElement>("frame-label");
  const images = new Map<number, HTMLImageElement | null>();

  let currentFrame = 0;
  let tool: Tool = "select";
  let selected: number | null = null;

  function frames(): number[] {
    return store.project?.frames.map((f) => f.index) ?? [];
  }

  function frameImage(index: number): HTMLImageElement | null {
    if (store.sid === null) return null;
    if (!images.has(index)) {
      images.set(index, null);
      const img = new Image();
      img.onload = () => {
        images.set(index, img);
        draw();
      };
      img.src = client.frameUrl(store.sid, index);
    }
    return images.get(index) ?? null;
  }

  function view() {
    const size = store.project?.image_size ?? { width: canvas.width, height: canvas.height };
    return fitTransform(size.width, size.height, canvas.width, canvas.height);
  }

  function draw(): void {
    const t = view();
    ctx.fillStyle = "#202228";
    ctx.fillRect(0, 0, canvas.width, canvas.height);
    const project = store.project;
    if (project === null) return;

    const img = frameImage(currentFrame);
    if (img !== null) {
      ctx.drawImage(
        img,
        t.offsetX,
        t.offsetY,
        project.image_size.width * t.scale,
        project.image_size.height * t.scale,
      );
    }

    ctx.lineWidth = 1.5;
    for (const line of project.lines) {
      ctx.strokeStyle = "#e8c547";
      ctx.beginPath();
      line.points.forEach((p, i) => {
        const c = toCanvas(t, p);
        if (i === 0) ctx.moveTo(c.x, c.y);
        else ctx.lineTo(c.x, c.y);
      });
      ctx.stroke();
    }

    if (project.grid !== null) {
      ctx.strokeStyle = "#4fc3f7";
      ctx.beginPath();
      gridPolygon(project.grid).forEach((p, i) => {
        const c = toCanvas(t, p);
        if (i === 0) ctx.moveTo(c.x, c.y);
        else ctx.lineTo(c.x, c.y);
      });
      ctx.stroke();
    }

    const cps = project.path?.cps ?? [];
    ctx.strokeStyle = "#9ccc65";
    ctx.beginPath();
    pathPolyline(cps).forEach((p, i) => {
      const c = toCanvas(t, p);
      if (i === 0) ctx.moveTo(c.x, c.y);
      else ctx.lineTo(c.x, c.y);
    });
    ctx.stroke();

    cps.forEach((cp, i) => {
      const box = uncertaintyBox(cp);
      const tl = toCanvas(t, { x: box.left, y: box.top });
      ctx.strokeStyle = i === selected ? "#ff7043" : cp.frame === currentFrame ? "#ffffff" : "#9ccc65";
      ctx.beginPath();
      ctx.rect(tl.x, tl.y, box.width * t.scale, box.height * t.scale);
      ctx.stroke();
    });
  }

  function render(): void {
    el<HTMLElement>("revision").textContent = `rev ${store.revision}`;
    frameLabel.textContent = `frame ${currentFrame}`;

    const warnings = el<HTMLUListElement>("warnings");
    warnings.replaceChildren(
      ...store.warnings.map((w) => {
        const li = document.createElement("li");
        li.textContent = w;
        return li;
      }),
    );

    const head = el<HTMLElement>("headline");
    if (store.estimate !== null) {
      head.textContent = headline(store.estimate.doc).join("\n");
      el<HTMLElement>("estimate-raw").textContent = store.estimate.raw;
    } else {
      head.textContent = store.estimateError ?? missingLabel(store.estimateMissing);
      el<HTMLElement>("estimate-raw").textContent = "";
    }

    const parts: string[] = [];
    if (store.project !== null) parts.push(timingLabel(store.project.timing));
    if (store.stagedCorners > 0) parts.push(`${store.stagedCorners} grid corner(s) staged`);
    if (selected !== null) {
      const cp = store.project?.path?.cps[selected];
      if (cp !== undefined) parts.push(`selected cp ${selected}: ${boxSizeLabel(cp.m)}`);
    }
    if (store.lastError !== null) parts.push(store.lastError);
    el<HTMLElement>("status").textContent = parts.join("  |  ");

    const preview = el<HTMLImageElement>("preview");
    if (store.sid !== null && store.project?.grid != null) {
      preview.src = `${client.previewUrl(store.sid, currentFrame)}&rev=${store.revision}`;
      preview.hidden = false;
    } else {
      preview.hidden = true;
    }
    draw();
  }

  store.subscribe(render);

  el<HTMLButtonElement>("open").addEventListener("click", () => {
    const path = el<HTMLInputElement>("path").value.trim();
    if (path === "") return;
    images.clear();
    selected = null;
    store
      .open(path)
      .then(() => {
        currentFrame = frames()[0] ?? 0;
        render();
      })
      .catch(report);
  });

  el<HTMLButtonElement>("save").addEventListener("click", () => {
    store
      .save()
      .then((path) => {
        el<HTMLElement>("status").textContent = `saved ${path}`;
      })
      .catch(report);
  });

  el<HTMLButtonElement>("prev").addEventListener("click", () => {
    const fs = frames();
    const i = fs.indexOf(currentFrame);
    if (i > 0) currentFrame = fs[i - 1]!;
    render();
  });
  el<HTMLButtonElement>("next").addEventListener("click", () => {
    const fs = frames();
    const i = fs.indexOf(currentFrame);
    if (i >= 0 && i < fs.length - 1) currentFrame = fs[i + 1]!;
    render();
  });

  for (const name of ["select", "point", "corner"] as Tool[]) {
    el<HTMLInputElement>(`tool-${name}`).addEventListener("change", () => {
      tool = name;
    });
  }

  canvas.addEventListener("click", (ev) => {
    if (store.project === null) return;
    const rect = canvas.getBoundingClientRect();
    const p: PixelPoint = toImage(view(), {
      x: ((ev.clientX - rect.left) * canvas.width) / rect.width,
      y: ((ev.clientY - rect.top) * canvas.height) / rect.height,
    });
    if (tool === "point") {
      const m = Number(el<HTMLInputElement>("m-input").value) || 1;
      store.addContactPoint(currentFrame, p, m).catch(report);
    } else if (tool === "corner") {
      store.addGridCorner(p).catch(report);
    } else {
      selected = nearestContactPoint(store.project.path?.cps ?? [], p, 12 / view().scale);
      render();
    }
  });

  el<HTMLButtonElement>("move-selected").addEventListener("click", () => {
    if (selected === null) return;
    const cp = store.project?.path?.cps[selected];
    if (cp === undefined) return;
    const x = Number(el<HTMLInputElement>("move-x").value);
    const y = Number(el<HTMLInputElement>("move-y").value);
    if (Number.isFinite(x) && Number.isFinite(y)) {
      store.moveContactPoint(selected, { x, y }).catch(report);
    }
  });

  el<HTMLButtonElement>("delete-selected").addEventListener("click", () => {
    if (selected === null) return;
    const index = selected;
    selected = null;
    store.deleteContactPoint(index).catch(report);
  });

  el<HTMLInputElement>("m-input").addEventListener("change", () => {
    if (selected === null) return;
    const m = Number(el<HTMLInputElement>("m-input").value);
    if (Number.isInteger(m) && m >= 0) store.setM(selected, m).catch(report);
  });

  el<HTMLButtonElement>("grid-size-set").addEventListener("click", () => {
    const w = Number(el<HTMLInputElement>("grid-w").value);
    const h = Number(el<HTMLInputElement>("grid-h").value);
    if (w > 0 && h > 0) store.setGridSize(w, h).catch(report);
  });

  el<HTMLButtonElement>("grid-clear").addEventListener("click", () => {
    store.clearGrid().catch(report);
  });

  el<HTMLInputElement>("prefix-toggle").addEventListener("change", (ev) => {
    store.setPrefixTable((ev.target as HTMLInputElement).checked).catch(report);
  });

  render();
}

window.addEventListener("DOMContentLoaded", main);
