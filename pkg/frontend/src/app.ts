import { ApiClient } from "./api";
import { GraphView } from "./graphview";
import { ViewState } from "./state";
import { TabsView } from "./tabs";
import type { GraphPayload, SessionPayload, SourceKind, TabKind, TabPayload } from "./types";
import { SOURCE_KINDS } from "./types";

/**
 * Wires the search form, result tabs, document panel and connection graph
 * together. All truth lives server-side: this class only forwards payloads
 * into the views and reports the user's gestures back as events.
 */
export class App {
    readonly state = new ViewState();
    session: SessionPayload | null = null;
    graph: GraphPayload | null = null;
    tabsView: TabsView | null = null;
    graphView: GraphView | null = null;
    expandPending = false;

    private form: HTMLFormElement;
    private input: HTMLInputElement;
    private validation: HTMLElement;
    private status: HTMLElement;
    private results: HTMLElement;
    private docPanel: HTMLElement;
    private toast: HTMLElement;

    constructor(
        private root: HTMLElement,
        private api: ApiClient,
        private user = "reporter",
    ) {
        const doc = root.ownerDocument;
        const make = <K extends keyof HTMLElementTagNameMap>(tag: K, className: string) => {
            const el = doc.createElement(tag);
            el.className = className;
            root.appendChild(el);
            return el;
        };

        this.form = make("form", "search-form");
        this.input = doc.createElement("input");
        this.input.type = "search";
        this.input.className = "search-input";
        this.input.placeholder = "Search articles, companies, officers and the web";
        const submit = doc.createElement("button");
        submit.type = "submit";
        submit.textContent = "Search";
        this.form.append(this.input, submit);

        this.validation = make("p", "validation hidden");
        this.status = make("div", "source-status hidden");
        this.results = make("div", "results hidden");
        this.docPanel = make("aside", "doc-panel hidden");
        this.toast = make("div", "toast hidden");

        this.form.addEventListener("submit", (event) => {
            event.preventDefault();
            void this.search(this.input.value);
        });
    }

    async search(query: string): Promise<void> {
        if (!query.trim()) {
            this.validation.textContent = "Type a query first.";
            this.validation.classList.remove("hidden");
            return;
        }
        this.validation.classList.add("hidden");
        this.showLoading();
        try {
            const session = await this.api.createSession(this.user, query);
            this.renderSession(session);
            this.rememberSession(session.session_id);
        } catch (err) {
            this.showToast(`Search failed: ${(err as Error).message}`);
        } finally {
            this.status.classList.add("hidden");
        }
    }

    /**
     * Rebuild the view for an existing session (page reload). Truth is
     * server-side, so re-fetching the tabs and graph reproduces the same
     * rendered node/edge set; only the view transform starts over.
     */
    async restore(sessionId: string): Promise<boolean> {
        try {
            const [graph, ...tabList] = await Promise.all([
                this.api.getGraph(sessionId),
                ...SOURCE_KINDS.map((source) => this.api.getTab(sessionId, source)),
            ]);
            const tabs = Object.fromEntries(
                SOURCE_KINDS.map((source, i) => [source, tabList[i] as TabPayload]),
            ) as Record<SourceKind, TabPayload>;
            this.renderSession({ session_id: sessionId, tabs, entities: [], graph });
            return true;
        } catch {
            return false;
        }
    }

    private rememberSession(sessionId: string): void {
        const win = this.root.ownerDocument.defaultView;
        if (win) win.location.hash = sessionId;
    }

    private showLoading(): void {
        this.status.textContent = "";
        const doc = this.root.ownerDocument;
        for (const source of SOURCE_KINDS) {
            const badge = doc.createElement("span");
            badge.className = "loading-badge";
            badge.dataset.source = source;
            badge.textContent = `${source}…`;
            this.status.appendChild(badge);
        }
        this.status.classList.remove("hidden");
    }

    private renderSession(session: SessionPayload): void {
        this.session = session;
        this.state.sessionId = session.session_id;
        this.results.textContent = "";
        this.results.classList.remove("hidden");

        this.tabsView = new TabsView(this.results, {
            onTabSwitch: (tab) => this.onTabSwitch(tab),
            onResultClick: (docId) => void this.openDocument(docId),
        });
        this.tabsView.renderResults(session);
        this.graphView = new GraphView(this.tabsView.graphPane, this.state, {
            onExpand: (entityId) => void this.expand(entityId),
        });
        this.setGraph(session.graph);
        this.tabsView.activate("articles");
        this.state.activeTab = "articles";
    }

    private setGraph(graph: GraphPayload): void {
        this.graph = graph;
        this.graphView?.update(graph);
    }

    private onTabSwitch(tab: TabKind): void {
        this.state.activeTab = tab;
        if (this.state.sessionId) {
            void this.api.sendEvent(this.state.sessionId, {
                kind: "tab_view",
                payload: { tab },
            });
        }
    }

    async openDocument(docId: string): Promise<void> {
        if (!this.state.sessionId) return;
        void this.api.sendEvent(this.state.sessionId, {
            kind: "clickthrough",
            payload: { doc_id: docId },
        });
        try {
            const doc = await this.api.getDoc(this.state.sessionId, docId);
            const d = this.root.ownerDocument;
            this.docPanel.textContent = "";
            const title = d.createElement("h2");
            title.textContent = doc.title || "(untitled)";
            const meta = d.createElement("p");
            meta.className = "doc-meta";
            meta.textContent = [doc.source, doc.published_at, doc.url].filter(Boolean).join(" · ");
            const body = d.createElement("p");
            body.className = "doc-body";
            body.textContent = doc.body;
            this.docPanel.append(title, meta, body);
            this.docPanel.classList.remove("hidden");
        } catch (err) {
            this.showToast(`Could not load document: ${(err as Error).message}`);
        }
    }

    /** Click-to-expand; one mutating request in flight at a time. */
    async expand(entityId: string): Promise<void> {
        if (!this.state.sessionId || this.expandPending) return;
        this.expandPending = true;
        this.root.classList.add("expanding");
        try {
            const graph = await this.api.expand(this.state.sessionId, entityId);
            this.setGraph(graph);
        } catch (err) {
            // Keep the current graph untouched on failure.
            this.showToast(`Expand failed: ${(err as Error).message}`);
        } finally {
            this.expandPending = false;
            this.root.classList.remove("expanding");
        }
    }

    private showToast(message: string): void {
        this.toast.textContent = message;
        this.toast.classList.remove("hidden");
    }
}
