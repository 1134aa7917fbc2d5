import * as d3 from "d3";
import type { EntityLabel, GraphPayload, LinkPayload, NodePayload } from "./types";
import { ViewState } from "./state";

const LABEL_COLORS: Record<EntityLabel, string> = {
    PER: "#c2410c",
    ORG: "#1d4ed8",
    LOC: "#15803d",
    MISC: "#7c3aed",
};

const LABEL_SYMBOLS: Record<EntityLabel, d3.SymbolType> = {
    PER: d3.symbolCircle,
    ORG: d3.symbolSquare,
    LOC: d3.symbolDiamond,
    MISC: d3.symbolTriangle,
};

interface SimNode extends d3.SimulationNodeDatum {
    payload: NodePayload;
    id: string;
}

interface SimLink extends d3.SimulationLinkDatum<SimNode> {
    payload: LinkPayload;
}

export interface GraphCallbacks {
    onExpand: (entityId: string) => void;
    onSelect?: (entityId: string | null) => void;
}

function nodeRadius(score: number): number {
    return 8 + 5 * Math.sqrt(Math.max(score, 0));
}

function edgeWidth(weight: number): number {
    return 1 + 1.5 * Math.sqrt(weight);
}

/**
 * Force-directed connection graph. The layout is decoration: nodes, edges
 * and the evidence panel all render verbatim from the payload. Dragged
 * nodes stay pinned where the user left them across expansions.
 */
export class GraphView {
    private svg: d3.Selection<SVGSVGElement, unknown, null, undefined>;
    private root: d3.Selection<SVGGElement, unknown, null, undefined>;
    private evidencePanel: HTMLElement;
    private simulation: d3.Simulation<SimNode, SimLink> | null = null;
    private nodes: SimNode[] = [];
    private links: SimLink[] = [];
    private positions = new Map<string, { x: number; y: number }>();

    constructor(
        private container: HTMLElement,
        private state: ViewState,
        private callbacks: GraphCallbacks,
        private width = 900,
        private height = 600,
    ) {
        this.svg = d3
            .select(container)
            .append("svg")
            .attr("class", "graph-canvas")
            .attr("viewBox", `0 0 ${width} ${height}`);
        this.root = this.svg.append("g").attr("class", "graph-root");
        this.evidencePanel = container.ownerDocument.createElement("div");
        this.evidencePanel.className = "evidence-panel hidden";
        container.appendChild(this.evidencePanel);
        this.setupZoom();
    }

    private setupZoom(): void {
        const zoom = d3
            .zoom<SVGSVGElement, unknown>()
            .scaleExtent([0.2, 8])
            .on("zoom", (event) => {
                const t = event.transform;
                this.state.transform = { x: t.x, y: t.y, scale: t.k };
                this.root.attr("transform", t.toString());
            });
        this.svg.call(zoom);
        this.svg.on("dblclick.zoom", null);
    }

    update(graph: GraphPayload): void {
        this.state.setGraph(graph);
        this.rememberPositions();
        if (this.simulation) this.simulation.stop();

        const previous = new Map(this.nodes.map((n) => [n.id, n]));
        this.nodes = graph.nodes.map((payload) => {
            const old = previous.get(payload.id);
            const node: SimNode = {
                id: payload.id,
                payload,
                x: old?.x ?? this.positions.get(payload.id)?.x ?? this.width / 2 + (Math.random() - 0.5) * 80,
                y: old?.y ?? this.positions.get(payload.id)?.y ?? this.height / 2 + (Math.random() - 0.5) * 80,
            };
            const pin = this.state.pinned.get(payload.id);
            if (pin) {
                node.fx = pin.x;
                node.fy = pin.y;
            }
            return node;
        });
        const byId = new Map(this.nodes.map((n) => [n.id, n]));
        this.links = graph.links.map((payload) => ({
            source: byId.get(payload.source)!,
            target: byId.get(payload.target)!,
            payload,
        }));

        this.render();

        this.simulation = d3
            .forceSimulation<SimNode>(this.nodes)
            .force("charge", d3.forceManyBody().strength(-220))
            .force(
                "link",
                d3
                    .forceLink<SimNode, SimLink>(this.links)
                    .id((n) => n.id)
                    .distance(120),
            )
            .force("center", d3.forceCenter(this.width / 2, this.height / 2))
            .force("collide", d3.forceCollide<SimNode>((n) => nodeRadius(n.payload.score) + 4))
            .on("tick", () => this.positionElements());
        this.simulation.alpha(1).restart();
    }

    private rememberPositions(): void {
        for (const node of this.nodes) {
            if (node.x != null && node.y != null) {
                this.positions.set(node.id, { x: node.x, y: node.y });
            }
        }
    }

    private render(): void {
        const lines = this.root
            .selectAll<SVGLineElement, SimLink>("line.edge")
            .data(this.links, (l) => `${l.payload.source}→${l.payload.target}`);
        lines.exit().remove();
        const enteredLines = lines
            .enter()
            .append("line")
            .attr("class", "edge")
            .on("mouseenter", (_event, link) => this.showEvidence(link.payload))
            .on("mouseleave", () => this.hideEvidence());
        enteredLines
            .merge(lines)
            .attr("stroke-width", (l) => edgeWidth(l.payload.weight))
            .attr("data-weight", (l) => l.payload.weight);

        const nodes = this.root
            .selectAll<SVGGElement, SimNode>("g.node")
            .data(this.nodes, (n) => n.id);
        nodes.exit().remove();
        const entered = nodes
            .enter()
            .append("g")
            .attr("class", "node entering")
            .attr("data-id", (n) => n.id)
            .on("click", (_event, node) => {
                this.state.selectedEntity = node.id;
                this.callbacks.onSelect?.(node.id);
                this.callbacks.onExpand(node.id);
            });
        entered
            .append("path")
            .attr("class", "node-shape")
            .attr("d", (n) =>
                d3
                    .symbol(LABEL_SYMBOLS[n.payload.label], Math.PI * nodeRadius(n.payload.score) ** 2)()
            )
            .attr("fill", (n) => LABEL_COLORS[n.payload.label]);
        entered
            .append("text")
            .attr("class", "node-label")
            .attr("dy", (n) => nodeRadius(n.payload.score) + 14)
            .text((n) => n.payload.display);
        entered.call(
            d3
                .drag<SVGGElement, SimNode>()
                .on("drag", (event, node) => {
                    node.fx = event.x;
                    node.fy = event.y;
                    this.simulation?.alpha(0.3).restart();
                })
                .on("end", (event, node) => {
                    // Dropping a node pins it; the position survives expansions.
                    node.fx = event.x;
                    node.fy = event.y;
                    this.state.pin(node.id, event.x, event.y);
                }),
        );
        this.positionElements();
    }

    private positionElements(): void {
        this.root
            .selectAll<SVGLineElement, SimLink>("line.edge")
            .attr("x1", (l) => (l.source as SimNode).x ?? 0)
            .attr("y1", (l) => (l.source as SimNode).y ?? 0)
            .attr("x2", (l) => (l.target as SimNode).x ?? 0)
            .attr("y2", (l) => (l.target as SimNode).y ?? 0);
        this.root
            .selectAll<SVGGElement, SimNode>("g.node")
            .attr("transform", (n) => `translate(${n.x ?? 0},${n.y ?? 0})`);
    }

    private showEvidence(link: LinkPayload): void {
        const doc = this.container.ownerDocument;
        this.evidencePanel.textContent = "";
        const heading = doc.createElement("div");
        heading.className = "evidence-heading";
        heading.textContent = `${link.weight} shared document${link.weight === 1 ? "" : "s"} (${link.hint})`;
        this.evidencePanel.appendChild(heading);
        const list = doc.createElement("ul");
        for (const ev of link.evidence) {
            const item = doc.createElement("li");
            item.className = "evidence-item";
            item.textContent = `${ev.title} — ${ev.src}`;
            list.appendChild(item);
        }
        this.evidencePanel.appendChild(list);
        this.evidencePanel.classList.remove("hidden");
    }

    private hideEvidence(): void {
        this.evidencePanel.classList.add("hidden");
    }

    /** Counts straight from the DOM, for the "rendered == payload" invariant. */
    renderedCounts(): { nodes: number; links: number } {
        return {
            nodes: this.container.querySelectorAll("g.node").length,
            links: this.container.querySelectorAll("line.edge").length,
        };
    }

    /** Run the simulation to quiescence synchronously (tests, no rAF). */
    settle(ticks = 120): void {
        if (!this.simulation) return;
        this.simulation.stop();
        for (let i = 0; i < ticks; i++) this.simulation.tick();
        this.positionElements();
    }

    stop(): void {
        this.simulation?.stop();
    }
}
