import type { GraphPayload, TabKind } from "./types";

export interface Transform {
    x: number;
    y: number;
    scale: number;
}

export const IDENTITY: Transform = { x: 0, y: 0, scale: 1 };

/** Zoom by a factor around a fixed point, keeping that point stationary. */
export function zoomAt(t: Transform, factor: number, cx: number, cy: number): Transform {
    const scale = t.scale * factor;
    if (scale <= 0) throw new Error(`zoom scale must stay positive, got ${scale}`);
    return {
        scale,
        x: cx - (cx - t.x) * factor,
        y: cy - (cy - t.y) * factor,
    };
}

export function pan(t: Transform, dx: number, dy: number): Transform {
    return { ...t, x: t.x + dx, y: t.y + dy };
}

export function resetTransform(): Transform {
    return { ...IDENTITY };
}

export function transformsEqual(a: Transform, b: Transform, eps = 1e-9): boolean {
    return Math.abs(a.x - b.x) < eps && Math.abs(a.y - b.y) < eps && Math.abs(a.scale - b.scale) < eps;
}

/**
 * Client-side view state. Everything here is presentation only; the session
 * truth (corpus, graph, tabs) lives on the server and is re-fetchable.
 */
export class ViewState {
    sessionId: string | null = null;
    activeTab: TabKind = "articles";
    transform: Transform = resetTransform();
    selectedEntity: string | null = null;
    pinned = new Map<string, { x: number; y: number }>();

    setGraph(graph: GraphPayload): void {
        const ids = new Set(graph.nodes.map((n) => n.id));
        if (this.selectedEntity && !ids.has(this.selectedEntity)) {
            this.selectedEntity = null;
        }
        for (const id of [...this.pinned.keys()]) {
            if (!ids.has(id)) this.pinned.delete(id);
        }
    }

    pin(id: string, x: number, y: number): void {
        this.pinned.set(id, { x, y });
    }

    unpin(id: string): void {
        this.pinned.delete(id);
    }
}
