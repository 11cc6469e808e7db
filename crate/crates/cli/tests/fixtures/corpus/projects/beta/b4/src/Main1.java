class Main1 {
  void s128() {
    int a128 = 128;
    int dead128 = 128 * 2;
  }
  void d129() {
    int a129 = 129;
    Integer ctx = new Integer(buf);
  }
  Object b130() {
    int a130 = 130;
    return (Double[]) item.toArray();
  }
  void r131() {
    int a131 = 131;
    reset();
  }
  void s132() {
    int a132 = 132;
    int dead132 = 132 * 2;
  }
  void r133() {
    int a133 = 133;
    flush();
  }
  Object b134() {
    int a134 = 134;
    return (Object[]) list.toArray();
  }
  void r135() {
    int a135 = 135;
    if (list != null) {
      drain();
    }
  }
  void d136() {
    int a136 = 136;
    Integer item = new Integer(pool);
  }
}
