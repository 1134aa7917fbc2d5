import type { DocumentPayload, SessionPayload, SourceKind, TabKind } from "./types";
import { SOURCE_KINDS, TAB_KINDS } from "./types";

export interface TabsCallbacks {
    onTabSwitch: (tab: TabKind) => void;
    onResultClick: (docId: string) => void;
}

const TAB_TITLES: Record<TabKind, string> = {
    articles: "Articles",
    companies: "Companies",
    officers: "Officers",
    web: "Web",
    connections: "Connections",
};

/**
 * The per-source result tabs plus the Connections tab. Sources stay
 * separated; the graph container is handed to the caller for rendering.
 */
export class TabsView {
    private bar: HTMLElement;
    private panes = new Map<TabKind, HTMLElement>();
    private buttons = new Map<TabKind, HTMLButtonElement>();
    readonly graphPane: HTMLElement;

    constructor(
        private container: HTMLElement,
        private callbacks: TabsCallbacks,
    ) {
        const doc = container.ownerDocument;
        this.bar = doc.createElement("nav");
        this.bar.className = "tab-bar";
        container.appendChild(this.bar);
        for (const tab of TAB_KINDS) {
            const button = doc.createElement("button");
            button.className = "tab-button";
            button.dataset.tab = tab;
            button.textContent = TAB_TITLES[tab];
            button.addEventListener("click", () => {
                this.activate(tab);
                this.callbacks.onTabSwitch(tab);
            });
            this.bar.appendChild(button);
            this.buttons.set(tab, button);

            const pane = doc.createElement("section");
            pane.className = "tab-pane hidden";
            pane.dataset.tab = tab;
            container.appendChild(pane);
            this.panes.set(tab, pane);
        }
        this.graphPane = this.panes.get("connections")!;
    }

    /** Show a tab's pane. Fires no event: events belong to user gestures. */
    activate(tab: TabKind): void {
        for (const [kind, pane] of this.panes) {
            pane.classList.toggle("hidden", kind !== tab);
        }
        for (const [kind, button] of this.buttons) {
            button.classList.toggle("active", kind === tab);
        }
    }

    renderResults(session: SessionPayload): void {
        const doc = this.container.ownerDocument;
        for (const source of SOURCE_KINDS) {
            const tab = session.tabs[source];
            const pane = this.panes.get(source)!;
            pane.textContent = "";
            const button = this.buttons.get(source)!;
            button.classList.toggle("degraded", tab.degraded);
            button.title = tab.degraded ? "source unavailable, showing fallback data" : "";
            if (tab.items.length === 0) {
                const empty = doc.createElement("p");
                empty.className = "empty-tab";
                empty.textContent = tab.degraded
                    ? "This source is unavailable right now."
                    : "No results from this source.";
                pane.appendChild(empty);
                continue;
            }
            const list = doc.createElement("ul");
            list.className = "result-list";
            for (const item of tab.items) {
                list.appendChild(this.resultRow(item));
            }
            pane.appendChild(list);
        }
    }

    private resultRow(item: DocumentPayload): HTMLElement {
        const doc = this.container.ownerDocument;
        const row = doc.createElement("li");
        row.className = "result-row";
        row.dataset.doc = item.id;
        const title = doc.createElement("span");
        title.className = "result-title";
        title.textContent = item.title || "(untitled)";
        const meta = doc.createElement("span");
        meta.className = "result-meta";
        meta.textContent = item.url ? `${item.source} · ${item.url}` : item.source;
        row.append(title, meta);
        row.addEventListener("click", () => this.callbacks.onResultClick(item.id));
        return row;
    }

    resultCount(source: SourceKind): number {
        return this.panes.get(source)!.querySelectorAll(".result-row").length;
    }
}
