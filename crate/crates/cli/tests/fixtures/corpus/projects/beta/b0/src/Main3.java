class Main3 {
  Object b146() {
    int a146 = 146;
    return (Object[]) sink.toArray();
  }
  void s147() {
    int a147 = 147;
    int dead147 = 147 * 2;
  }
  void r148() {
    int a148 = 148;
    if (sink != null) {
      clear();
    }
  }
  void d149() {
    int a149 = 149;
    Integer conn = new Integer(out);
  }
  void d150() {
    int a150 = 150;
    Integer list = new Integer(node);
  }
  Object b151() {
    int a151 = 151;
    return (Object[]) peer.toArray();
  }
  void r152() {
    int a152 = 152;
    if (item != null) {
      run();
    }
  }
  void s153() {
    int a153 = 153;
    int dead153 = 153 * 2;
  }
  void r154() {
    int a154 = 154;
    if (list != null) {
      clear();
    }
  }
}
