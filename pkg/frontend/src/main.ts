/** Browser entry point: wire the store, panel, and DOM, then sync up. */

import { ApiClient } from "./api.js";
import { Panel } from "./panel.js";
import { Store } from "./store.js";
import { bindUi } from "./ui.js";

const store = new Store();
const panel = new Panel(new ApiClient(), store);

bindUi(panel, store);

const sync = (): void => {
  panel.boot().catch((err) => {
    store.set({
      connected: false,
      runMsg: { kind: "error", text: `cannot reach service: ${String(err)}` },
    });
    setTimeout(sync, 2000);
  });
};
sync();
