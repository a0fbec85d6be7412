// Board rendering: the human's circular view as inline SVG. Dot radius grows
// with size, fill darkens with lower color, everything grayscale. Clicking a
// dot arms it for selection.

import type { DotPayload, ScenePayload } from "./api.js";

export const BOARD_SIZE = 400;
export const MIN_DOT_PX = 4;
export const MAX_DOT_PX = 11;

const SVG_NS = "http://www.w3.org/2000/svg";

export class MalformedSceneError extends Error {}

export function validateScene(scene: ScenePayload): void {
  if (!scene || !Array.isArray(scene.dots) || typeof scene.radius !== "number"
      || !(scene.radius > 0)) {
    throw new MalformedSceneError("scene payload is malformed");
  }
  for (const dot of scene.dots) {
    for (const field of ["id", "x", "y", "size", "color"] as const) {
      if (typeof dot[field] !== "number" || Number.isNaN(dot[field])) {
        throw new MalformedSceneError(`dot field ${field} is malformed`);
      }
    }
  }
}

export function dotCenterPx(dot: DotPayload, scene: ScenePayload): { cx: number; cy: number } {
  // own-frame coordinates in [-radius, radius]; screen y grows downward
  const scale = BOARD_SIZE / 2 / scene.radius;
  return {
    cx: BOARD_SIZE / 2 + (dot.x - scene.center[0]) * scale,
    cy: BOARD_SIZE / 2 - (dot.y - scene.center[1]) * scale,
  };
}

export function dotRadiusPx(size: number): number {
  // size in [-1, 1] -> radius strictly increasing in size
  return MIN_DOT_PX + ((size + 1) / 2) * (MAX_DOT_PX - MIN_DOT_PX);
}

export function dotFill(color: number): string {
  // color in [-1, 1], lower = darker; keep away from pure white so dots stay
  // visible on the pale board
  const level = Math.round(128 + color * 100);
  return `rgb(${level}, ${level}, ${level})`;
}

export interface BoardHandle {
  element: SVGSVGElement;
  /** currently armed dot id, if any */
  armed: () => number | null;
  disarm: () => void;
}

export function renderBoard(
  scene: ScenePayload,
  onArm?: (dotId: number) => void,
): BoardHandle {
  validateScene(scene);
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${BOARD_SIZE} ${BOARD_SIZE}`);
  svg.setAttribute("width", String(BOARD_SIZE));
  svg.setAttribute("height", String(BOARD_SIZE));
  svg.classList.add("board");

  const viewport = document.createElementNS(SVG_NS, "circle");
  viewport.setAttribute("cx", String(BOARD_SIZE / 2));
  viewport.setAttribute("cy", String(BOARD_SIZE / 2));
  viewport.setAttribute("r", String(BOARD_SIZE / 2 - 1));
  viewport.setAttribute("fill", "#fafafa");
  viewport.setAttribute("stroke", "#444");
  svg.appendChild(viewport);

  let armedId: number | null = null;
  const circles = new Map<number, SVGCircleElement>();

  for (const dot of scene.dots) {
    const { cx, cy } = dotCenterPx(dot, scene);
    const circle = document.createElementNS(SVG_NS, "circle");
    circle.setAttribute("cx", cx.toFixed(2));
    circle.setAttribute("cy", cy.toFixed(2));
    circle.setAttribute("r", dotRadiusPx(dot.size).toFixed(2));
    circle.setAttribute("fill", dotFill(dot.color));
    circle.setAttribute("stroke", "#222");
    circle.setAttribute("stroke-width", "1");
    circle.classList.add("dot");
    circle.dataset.dotId = String(dot.id);
    circle.addEventListener("click", () => {
      for (const other of circles.values()) {
        other.classList.remove("armed");
      }
      circle.classList.add("armed");
      armedId = dot.id;
      onArm?.(dot.id);
    });
    circles.set(dot.id, circle);
    svg.appendChild(circle);
  }

  return {
    element: svg,
    armed: () => armedId,
    disarm: () => {
      armedId = null;
      for (const circle of circles.values()) {
        circle.classList.remove("armed");
      }
    },
  };
}
